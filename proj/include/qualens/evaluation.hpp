#ifndef QUALENS_EVALUATION_HPP
#define QUALENS_EVALUATION_HPP

#include "qualens/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace qualens {

/// Raw measure values of one system. Absent keys are missing measures.
struct SystemMeasurements {
    std::string system_id;
    std::int64_t loc = 1;
    std::map<std::string, double> values;
};

struct EvaluationOptions {
    /// Utility assigned to a factor none of whose measures are available.
    double neutral_utility = 0.5;
    /// Evaluate as if manual-expert measures were not part of the model:
    /// their weights are dropped and factors measured only by them do not
    /// contribute to any aspect.
    bool automated_only = false;
};

struct FactorEvaluation {
    double utility = 0.5;
    /// True when no referenced measure was available.
    bool neutral = false;
    /// True when every referenced measure was excluded (automated-only mode).
    bool excluded = false;
    std::vector<std::string> missing_measures;
};

struct Grade {
    int discrete = 6;
    double continuous = 6.0;
};

struct EvaluationResult {
    std::string system_id;
    std::map<std::string, double> factor_utilities;
    std::map<std::string, double> aspect_utilities;
    double root_utility = 0.0;
    Grade grade;
    /// Referenced measures absent from the input, sorted, unique.
    std::vector<std::string> missing_measures;
    /// Factors that fell back to the neutral utility.
    std::vector<std::string> neutral_factors;
};

/// Linear ramp between the thresholds, clamped to [0,1] and inverted for
/// higher-is-less-present.
double normalize_measure(double value, double min_threshold, double max_threshold, Direction direction);
double normalize_measure(double value, const EvaluationSpec& spec);

FactorEvaluation evaluate_factor(const SystemMeasurements& system, const ProductFactor& factor,
    const EvaluationOptions& options = {}, const QualityModel* model = nullptr);

/// Weighted mean of the contributions of an aspect's child aspects and
/// impacting factors; weights renormalized over the available contributors.
/// A negative impact contributes (1 - utility). Children must already be in
/// `aspect_utilities`; factors absent from `factor_utilities` are skipped.
double evaluate_aspect(const QualityModel& model, const QualityAspect& aspect,
    const std::map<std::string, double>& factor_utilities,
    const std::map<std::string, double>& aspect_utilities,
    const EvaluationOptions& options = {});

Grade to_grade(double utility, std::span<const GradeBand> bands);

EvaluationResult evaluate_system(const QualityModel& model, const SystemMeasurements& system, const EvaluationOptions& options = {});

struct Calibration {
    double min_threshold = 0.0;
    double max_threshold = 1.0;
    std::size_t used = 0;
    std::size_t removed = 0;
    /// Survivors were all equal; max was widened by 1e-9.
    bool degenerate = false;
};

/// Tukey-fence outlier removal (1.5 IQR, type-7 quartiles), then min/max of
/// the survivors. Requires at least four finite values.
Calibration calibrate_thresholds(std::span<const double> values);

// -- measurement and report files -------------------------------------------

/// Reads `system_id,loc,<measure-id>...`; empty cells are missing values.
/// Columns not naming a measure of `model` (when given) are ignored with a warning.
std::vector<SystemMeasurements> read_measurements(const std::filesystem::path& path,
    const QualityModel* model = nullptr, std::vector<Diagnostic>* warnings = nullptr);
std::vector<SystemMeasurements> parse_measurements(std::string_view text,
    const QualityModel* model = nullptr, std::vector<Diagnostic>* warnings = nullptr);

std::string format_measurements_csv(std::span<const std::string> measure_ids, std::span<const SystemMeasurements> systems);

/// `system_id,root_utility,grade_discrete,grade_continuous,<aspect ids...>`
std::string evaluation_report_csv(const QualityModel& model, std::span<const EvaluationResult> results);
std::string evaluation_report_json(const QualityModel& model, std::span<const EvaluationResult> results);
std::string evaluation_detail_json(const EvaluationResult& result);

} // namespace qualens

#endif
