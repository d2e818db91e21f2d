#include "qualens/evaluation.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"
#include "qualens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace qualens {

using nlohmann::json;

double normalize_measure(double value, double min_threshold, double max_threshold, Direction direction)
{
    const double lambda = std::clamp((value - min_threshold) / (max_threshold - min_threshold), 0.0, 1.0);
    return direction == Direction::higher_is_more_present ? lambda : 1.0 - lambda;
}

double normalize_measure(double value, const EvaluationSpec& spec)
{
    return normalize_measure(value, spec.min_threshold, spec.max_threshold, spec.direction);
}

FactorEvaluation evaluate_factor(const SystemMeasurements& system, const ProductFactor& factor,
    const EvaluationOptions& options, const QualityModel* model)
{
    FactorEvaluation out;
    double weighted = 0.0;
    double total = 0.0;
    bool any_included = false;

    for (const auto& ref : factor.evaluation.measures) {
        if (options.automated_only && model) {
            const auto* m = model->find_measure(ref.measure_id);
            if (m && m->kind == MeasureKind::manual_expert)
                continue;
        }
        any_included = true;
        auto it = system.values.find(ref.measure_id);
        if (it == system.values.end() || std::isnan(it->second)) {
            out.missing_measures.push_back(ref.measure_id);
            continue;
        }
        weighted += ref.weight * normalize_measure(it->second, factor.evaluation);
        total += ref.weight;
    }

    if (!any_included) {
        out.excluded = true;
        out.utility = options.neutral_utility;
        return out;
    }
    if (total > 0.0) {
        out.utility = weighted / total;
    } else {
        out.utility = options.neutral_utility;
        out.neutral = true;
    }
    return out;
}

double evaluate_aspect(const QualityModel& model, const QualityAspect& aspect,
    const std::map<std::string, double>& factor_utilities,
    const std::map<std::string, double>& aspect_utilities,
    const EvaluationOptions& options)
{
    double weighted = 0.0;
    double total = 0.0;

    for (const auto& child : model.children_of(aspect.id)) {
        auto u = aspect_utilities.find(child);
        if (u == aspect_utilities.end())
            throw InternalError(fmt::format("aspect '{}' evaluated before its child '{}'", aspect.id, child));
        auto w = aspect.child_weights.find(child);
        const double weight = w == aspect.child_weights.end() ? 1.0 : w->second;
        weighted += weight * u->second;
        total += weight;
    }

    for (const auto& factor : model.factors) {
        auto u = factor_utilities.find(factor.id);
        if (u == factor_utilities.end())
            continue;
        for (const auto& impact : factor.impacts) {
            if (impact.target_aspect_id != aspect.id)
                continue;
            auto w = aspect.factor_weights.find(factor.id);
            const double weight = w == aspect.factor_weights.end() ? 1.0 : w->second;
            const double contribution = impact.polarity == Polarity::positive ? u->second : 1.0 - u->second;
            weighted += weight * contribution;
            total += weight;
        }
    }

    if (total <= 0.0)
        return options.neutral_utility;
    return std::clamp(weighted / total, 0.0, 1.0);
}

Grade to_grade(double utility, std::span<const GradeBand> bands)
{
    if (bands.empty())
        throw ValidationError("no grade bands");
    const double u = std::clamp(utility, 0.0, 1.0);
    std::size_t i = 0;
    while (i + 1 < bands.size() && bands[i + 1].lower <= u)
        ++i;
    const double lower = bands[i].lower;
    const double upper = i + 1 < bands.size() ? bands[i + 1].lower : 1.0;
    Grade g;
    g.discrete = bands[i].grade;
    const double t = upper > lower ? (u - lower) / (upper - lower) : 0.0;
    g.continuous = std::clamp(static_cast<double>(bands[i].grade) - t, 1.0, 6.0);
    return g;
}

namespace {

void post_order(const QualityModel& model, const std::string& id, std::vector<std::string>& order, std::vector<std::string>& stack)
{
    if (std::find(stack.begin(), stack.end(), id) != stack.end())
        throw InternalError(fmt::format("cycle in aspect hierarchy at '{}'", id));
    stack.push_back(id);
    for (const auto& child : model.children_of(id))
        post_order(model, child, order, stack);
    stack.pop_back();
    order.push_back(id);
}

} // namespace

EvaluationResult evaluate_system(const QualityModel& model, const SystemMeasurements& system, const EvaluationOptions& options)
{
    EvaluationResult result;
    result.system_id = system.system_id;

    for (const auto& factor : model.factors) {
        auto fe = evaluate_factor(system, factor, options, &model);
        if (fe.excluded)
            continue;
        result.factor_utilities[factor.id] = fe.utility;
        if (fe.neutral)
            result.neutral_factors.push_back(factor.id);
        result.missing_measures.insert(result.missing_measures.end(), fe.missing_measures.begin(), fe.missing_measures.end());
    }
    std::sort(result.missing_measures.begin(), result.missing_measures.end());
    result.missing_measures.erase(std::unique(result.missing_measures.begin(), result.missing_measures.end()), result.missing_measures.end());

    std::vector<std::string> order;
    std::vector<std::string> stack;
    post_order(model, model.root_aspect_id, order, stack);
    for (const auto& id : order) {
        const auto* aspect = model.find_aspect(id);
        if (!aspect)
            throw InternalError(fmt::format("unknown aspect '{}'", id));
        result.aspect_utilities[id] = evaluate_aspect(model, *aspect, result.factor_utilities, result.aspect_utilities, options);
    }

    result.root_utility = result.aspect_utilities.at(model.root_aspect_id);
    result.grade = to_grade(result.root_utility, model.grade_bands);
    return result;
}

Calibration calibrate_thresholds(std::span<const double> values)
{
    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v))
            sorted.push_back(v);
    if (sorted.size() < 4)
        throw ValidationError(fmt::format("calibration needs at least 4 finite values, got {}", sorted.size()));
    std::sort(sorted.begin(), sorted.end());

    const double q1 = stats::quantile_sorted(sorted, 0.25);
    const double q3 = stats::quantile_sorted(sorted, 0.75);
    const double iqr = q3 - q1;
    const double lo_fence = q1 - 1.5 * iqr;
    const double hi_fence = q3 + 1.5 * iqr;

    Calibration c;
    bool first = true;
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) {
            ++c.removed;
            continue;
        }
        if (first) {
            c.min_threshold = v;
            first = false;
        }
        c.max_threshold = v;
        ++c.used;
    }
    if (c.max_threshold <= c.min_threshold) {
        c.max_threshold = c.min_threshold + 1e-9;
        c.degenerate = true;
    }
    return c;
}

// ---------------------------------------------------------------------------

std::vector<SystemMeasurements> parse_measurements(std::string_view text, const QualityModel* model, std::vector<Diagnostic>* warnings)
{
    const auto table = csv::parse(text);
    if (table.header.size() < 2 || table.header[0] != "system_id" || table.header[1] != "loc")
        throw ParseError("measurement csv: header must start with 'system_id,loc'");

    std::vector<bool> keep(table.header.size(), true);
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        if (model && !model->find_measure(table.header[c])) {
            keep[c] = false;
            if (warnings)
                warnings->push_back({Severity::warning, "measurements", fmt::format("unknown measure column '{}' ignored", table.header[c])});
        }
    }

    std::vector<SystemMeasurements> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        SystemMeasurements s;
        s.system_id = row[0];
        if (s.system_id.empty())
            throw ParseError(fmt::format("measurement csv row {}: empty system_id", r + 1));
        const double loc = csv::parse_number(row[1], fmt::format("measurement csv row {} loc", r + 1));
        if (loc < 1.0 || loc != std::floor(loc))
            throw ValidationError(fmt::format("measurement csv row {}: loc must be a positive integer", r + 1));
        s.loc = static_cast<std::int64_t>(loc);
        for (std::size_t c = 2; c < row.size(); ++c) {
            if (!keep[c] || row[c].empty())
                continue;
            s.values[table.header[c]] = csv::parse_number(row[c], fmt::format("measurement csv row {} column '{}'", r + 1, table.header[c]));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SystemMeasurements> read_measurements(const std::filesystem::path& path, const QualityModel* model, std::vector<Diagnostic>* warnings)
{
    return parse_measurements(read_text_file(path), model, warnings);
}

std::string format_measurements_csv(std::span<const std::string> measure_ids, std::span<const SystemMeasurements> systems)
{
    std::vector<std::string> header{"system_id", "loc"};
    header.insert(header.end(), measure_ids.begin(), measure_ids.end());
    std::string out = csv::join(header) + "\n";
    for (const auto& s : systems) {
        std::vector<std::string> row{s.system_id, std::to_string(s.loc)};
        for (const auto& id : measure_ids) {
            auto it = s.values.find(id);
            row.push_back(it == s.values.end() ? std::string() : csv::format_number(it->second));
        }
        out += csv::join(row) + "\n";
    }
    return out;
}

std::string evaluation_report_csv(const QualityModel& model, std::span<const EvaluationResult> results)
{
    std::vector<std::string> header{"system_id", "root_utility", "grade_discrete", "grade_continuous"};
    for (const auto& a : model.aspects)
        if (a.id != model.root_aspect_id)
            header.push_back(a.id);
    std::string out = csv::join(header) + "\n";
    for (const auto& r : results) {
        std::vector<std::string> row{r.system_id, csv::format_number(r.root_utility), std::to_string(r.grade.discrete), csv::format_number(r.grade.continuous)};
        for (const auto& a : model.aspects)
            if (a.id != model.root_aspect_id)
                row.push_back(csv::format_number(r.aspect_utilities.at(a.id)));
        out += csv::join(row) + "\n";
    }
    return out;
}

namespace {

json result_to_json(const EvaluationResult& r)
{
    return {
        {"system_id", r.system_id},
        {"root_utility", r.root_utility},
        {"grade_discrete", r.grade.discrete},
        {"grade_continuous", r.grade.continuous},
        {"aspect_utilities", r.aspect_utilities},
        {"factor_utilities", r.factor_utilities},
        {"missing_measures", r.missing_measures},
        {"neutral_factors", r.neutral_factors},
    };
}

} // namespace

std::string evaluation_report_json(const QualityModel& model, std::span<const EvaluationResult> results)
{
    json doc;
    doc["model"] = model.name;
    doc["root_aspect"] = model.root_aspect_id;
    json systems = json::array();
    for (const auto& r : results) {
        json j = {{"system_id", r.system_id}, {"root_utility", r.root_utility}, {"grade_discrete", r.grade.discrete},
            {"grade_continuous", r.grade.continuous}, {"aspect_utilities", r.aspect_utilities}, {"missing_measures", r.missing_measures}};
        systems.push_back(std::move(j));
    }
    doc["systems"] = systems;
    return doc.dump(2) + "\n";
}

std::string evaluation_detail_json(const EvaluationResult& result)
{
    return result_to_json(result).dump(2) + "\n";
}

} // namespace qualens
