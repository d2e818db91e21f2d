#ifndef QUALENS_SELECTION_HPP
#define QUALENS_SELECTION_HPP

#include "qualens/dataset.hpp"
#include "qualens/predictors.hpp"
#include "qualens/validation.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qualens {

enum class Strategy { forward, backward, bidirectional, cp_sweep };
enum class Criterion { cv_mar, ols_partial_f };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);
std::string_view to_string(Criterion criterion);
Criterion parse_criterion(std::string_view text);

/// {1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001, 0}
std::vector<double> default_cp_values();

struct SelectionConfig {
    Strategy strategy = Strategy::forward;
    PredictorSpec predictor;
    /// Upper bound on the subset size for forward and bidirectional search.
    std::size_t max_variables = 20;
    /// Forward and bidirectional search add variables up to this size even
    /// when the criterion does not improve.
    std::size_t min_variables = 0;
    double improvement_epsilon = 0.0;
    Criterion criterion = Criterion::cv_mar;
    std::size_t folds = 4;
    std::uint64_t seed = 42;
    std::size_t baseline_runs = 10000;
    double f_enter_alpha = 0.05;
    double f_remove_alpha = 0.10;
    std::vector<double> cp_values = default_cp_values();
};

struct SweepPoint {
    std::size_t n_variables = 0;
    std::vector<std::string> selected_measures;
    std::vector<std::size_t> columns;
    double mar = 0.0;
    double sa = 0.0;
    double delta = 0.0;
    std::vector<double> fold_mars;
    /// Complexity parameter that produced the point (cp sweep only).
    double cp = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::string predictor;
    std::string strategy;
    /// One point per subset size (best MAR kept), ascending size.
    std::vector<SweepPoint> points;
    /// Accepted states in search order.
    std::vector<SweepPoint> trajectory;
    SweepPoint best;
    SweepPoint compact;
    BaselineStats baseline;
    /// Candidates that could not be evaluated, with the reason.
    std::vector<std::string> skipped;
};

/// best: minimal MAR (tie: fewer variables). compact: fewest variables with
/// MAR <= 1.10 * best MAR (tie: lower MAR).
std::pair<SweepPoint, SweepPoint> select_compact(std::span<const SweepPoint> points);

SweepResult forward_select(const Dataset& data, const SelectionConfig& config);
SweepResult backward_eliminate(const Dataset& data, const SelectionConfig& config);
SweepResult bidirectional_eliminate(const Dataset& data, const SelectionConfig& config);
SweepResult cp_sweep(const Dataset& data, const SelectionConfig& config);

/// Dispatches on config.strategy.
SweepResult run_selection(const Dataset& data, const SelectionConfig& config);

/// Header `n_variables,mar,sa,delta,measures`; measures separated by ';'.
std::string sweep_csv(const SweepResult& result);
std::string sweep_json(const SweepResult& result);

} // namespace qualens

#endif
