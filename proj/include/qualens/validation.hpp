#ifndef QUALENS_VALIDATION_HPP
#define QUALENS_VALIDATION_HPP

#include "qualens/dataset.hpp"
#include "qualens/predictors.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qualens {

/// Mean absolute residual.
double mar(std::span<const double> y, std::span<const double> yhat);

/// Standardized accuracy: 1 - mar_p / baseline_mean_mar.
double sa(double mar_p, double baseline_mean_mar);

struct BaselineStats {
    double mean_mar = 0.0;
    double sd_mar = 0.0;
    double q5_mar = 0.0;
    std::size_t runs = 0;
    double exact_mean = 0.0;
    /// Set when every run has the same MAR (sd is zero).
    bool degenerate = false;
};

/// (baseline mean - mar_p) / baseline sd; positive when the predictor beats
/// random guessing.
double glass_delta(double mar_p, const BaselineStats& baseline);

enum class EffectLabel { negligible, small, medium, large };

std::string_view to_string(EffectLabel label);
EffectLabel effect_label(double delta);

/// Monte-Carlo random guessing: each run predicts every target from a
/// uniform draw over the other observed values.
BaselineStats random_baseline(std::span<const double> y, std::size_t runs, std::uint64_t seed);

/// Expected MAR of leave-one-out random guessing, computed exactly.
double exact_baseline_mar(std::span<const double> y);

struct FoldAssignment {
    std::size_t k = 0;
    /// Fold index per dataset row.
    std::vector<std::size_t> fold_of;
    std::uint64_t seed = 0;

    /// Rows of each fold, in ascending row order.
    std::vector<std::vector<std::size_t>> folds() const;
};

/// Shuffles the canonical row order with the seed and deals folds
/// round-robin.
FoldAssignment assign_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

struct CrossValidation {
    std::vector<double> fold_mars;
    double mar = 0.0;
    /// Out-of-fold prediction per dataset row.
    std::vector<double> predictions;
};

CrossValidation cross_validate(const Dataset& data, const PredictorSpec& spec, std::span<const std::size_t> columns,
    const FoldAssignment& folds);
CrossValidation cross_validate(const Dataset& data, const PredictorSpec& spec, std::span<const std::size_t> columns,
    std::size_t k, std::uint64_t seed);

struct Scorecard {
    std::string predictor;
    std::string strategy;
    std::size_t n_variables = 0;
    double mar = 0.0;
    double sa = 0.0;
    double delta = 0.0;
    EffectLabel effect_label = EffectLabel::negligible;
    std::vector<double> fold_mars;
    std::vector<std::string> variables;
};

Scorecard make_scorecard(std::string predictor, std::string strategy, double mar_p, const BaselineStats& baseline);

/// Header `predictor,strategy,n_variables,mar,sa,delta,effect_label`.
std::string scorecards_csv(std::span<const Scorecard> cards);
std::string scorecards_json(std::span<const Scorecard> cards, const BaselineStats& baseline);

} // namespace qualens

#endif
