#ifndef QUALENS_EXPERIMENTS_HPP
#define QUALENS_EXPERIMENTS_HPP

#include "qualens/dataset.hpp"
#include "qualens/evaluation.hpp"
#include "qualens/model.hpp"
#include "qualens/selection.hpp"
#include "qualens/validation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qualens {

/// Evaluates every system and pairs the root grade with the measure values.
/// Columns follow the model's measure order. Count-unit measures are divided
/// by kLoC. Columns missing for every system are dropped with a warning;
/// isolated missing cells are filled with the column median.
Dataset build_dataset(const QualityModel& model, std::span<const SystemMeasurements> systems, YKind y_kind,
    const EvaluationOptions& options = {}, std::vector<Diagnostic>* warnings = nullptr);

struct PredictorConfig {
    std::string name;
    SelectionConfig selection;
};

/// OLS forward/backward/bidirectional, CART cp sweep, CART forward and
/// random-forest forward, all sharing `base`'s folds, seed and limits.
std::vector<PredictorConfig> standard_configs(const SelectionConfig& base);

struct Rq1Result {
    BaselineStats baseline;
    std::vector<PredictorConfig> configs;
    std::vector<SweepResult> sweeps;
    /// Random guessing, the 5% quantile of random guessing, then the best
    /// and compact point of every configuration.
    std::vector<Scorecard> scorecards;
};

Rq1Result run_rq1(const Dataset& data, std::span<const PredictorConfig> configs, std::size_t k, std::uint64_t seed,
    std::size_t random_guess_evaluations = 1000);

/// Long-format `predictor strategy n_variables mar sa` rows for plotting.
std::string plot_data_tsv(std::span<const SweepResult> sweeps);

struct Rq2Report {
    std::vector<std::size_t> counts;
    std::vector<std::vector<std::string>> measures;
    /// Cross-validated SA on the training corpus (automated-only truth).
    std::vector<double> sa_automated_only;
    /// SA on the holdout, whose truth includes the expert measures.
    std::vector<double> sa_with_expert_truth;
    /// Standard deviation of SA over random subsets of holdout size.
    std::vector<double> sa_noise_sd;
    std::size_t holdout_n = 0;
    std::size_t resamples = 0;
    BaselineStats baseline;
};

/// Forward selection on `train` (expert columns are removed), forced up to
/// the largest requested count; each count's subset is refit on all of
/// `train` and scored on `holdout`.
Rq2Report run_rq2(const Dataset& train, const Dataset& holdout, const SelectionConfig& config,
    std::span<const std::size_t> counts, std::size_t resamples = 1000);

std::string rq2_json(const Rq2Report& report);
std::string rq2_csv(const Rq2Report& report);

} // namespace qualens

#endif
