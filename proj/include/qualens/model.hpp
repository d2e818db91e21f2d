#ifndef QUALENS_MODEL_HPP
#define QUALENS_MODEL_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qualens {

enum class MeasureKind { automatic, manual_expert };
enum class MeasureUnit { proportion, findings_per_kloc, count, raw };
enum class Direction { higher_is_more_present, higher_is_less_present };
enum class Polarity { positive, negative };

struct Measure {
    std::string id;
    std::string name;
    MeasureKind kind = MeasureKind::automatic;
    MeasureUnit unit = MeasureUnit::raw;
    std::string description;
};

struct MeasureRef {
    std::string measure_id;
    double weight = 1.0;
};

/// Linear mapping of measure values onto [0,1] between two thresholds.
struct EvaluationSpec {
    std::vector<MeasureRef> measures;
    double min_threshold = 0.0;
    double max_threshold = 1.0;
    Direction direction = Direction::higher_is_more_present;
};

struct Impact {
    std::string target_aspect_id;
    Polarity polarity = Polarity::positive;
    std::string justification;
};

/// A property of a product entity, evaluated from its measures and
/// influencing one or more quality aspects.
struct ProductFactor {
    std::string id;
    std::string entity;
    std::string name;
    EvaluationSpec evaluation;
    std::vector<Impact> impacts;
};

/// Node of the aspect tree. Missing entries in the weight maps mean 1.0.
struct QualityAspect {
    std::string id;
    std::string name;
    std::optional<std::string> parent_id;
    std::map<std::string, double> child_weights;
    std::map<std::string, double> factor_weights;
};

struct GradeBand {
    double lower = 0.0;
    int grade = 6;

    friend bool operator==(const GradeBand&, const GradeBand&) = default;
};

/// [0,0.90)->6, [0.90,0.92)->5, ... , [0.98,1.0]->1
std::vector<GradeBand> default_grade_bands();

struct QualityModel {
    std::string name;
    std::string root_aspect_id;
    std::vector<QualityAspect> aspects;
    std::vector<ProductFactor> factors;
    std::vector<Measure> measures;
    std::vector<GradeBand> grade_bands = default_grade_bands();

    const Measure* find_measure(std::string_view id) const;
    const ProductFactor* find_factor(std::string_view id) const;
    const QualityAspect* find_aspect(std::string_view id) const;

    /// Ids of aspects whose parent is `aspect_id`, in declaration order.
    std::vector<std::string> children_of(std::string_view aspect_id) const;
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string location;
    std::string message;
};

std::string to_string(const Diagnostic& d);

/// Checks every structural invariant. Empty result iff the model is valid
/// and warning-free.
std::vector<Diagnostic> validate_model(const QualityModel& model);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// Parses and validates a model document. Throws ParseError for malformed
/// JSON or wrongly typed fields and ValidationError listing every violated
/// invariant. Warnings (unknown fields, dangling factors) are appended to
/// `warnings` when given.
QualityModel parse_model(std::string_view json_text, std::vector<Diagnostic>* warnings = nullptr);
QualityModel load_model(const std::filesystem::path& path, std::vector<Diagnostic>* warnings = nullptr);

/// Canonical JSON text (sorted keys, two-space indent, trailing newline).
std::string dump_model(const QualityModel& model);
void save_model(const QualityModel& model, const std::filesystem::path& path);

std::string_view to_string(MeasureKind kind);
std::string_view to_string(MeasureUnit unit);
std::string_view to_string(Direction direction);
std::string_view to_string(Polarity polarity);

} // namespace qualens

#endif
