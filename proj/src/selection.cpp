#include "qualens/selection.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"
#include "qualens/parallel.hpp"
#include "qualens/rng.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <set>

namespace qualens {

std::string_view to_string(Strategy strategy)
{
    switch (strategy) {
    case Strategy::forward:
        return "forward";
    case Strategy::backward:
        return "backward";
    case Strategy::bidirectional:
        return "bidirectional";
    case Strategy::cp_sweep:
        return "cp-sweep";
    }
    return "?";
}

Strategy parse_strategy(std::string_view text)
{
    if (text == "forward")
        return Strategy::forward;
    if (text == "backward")
        return Strategy::backward;
    if (text == "bidirectional")
        return Strategy::bidirectional;
    if (text == "cp-sweep")
        return Strategy::cp_sweep;
    throw ParseError(fmt::format("unknown strategy '{}' (expected forward, backward, bidirectional or cp-sweep)", text));
}

std::string_view to_string(Criterion criterion)
{
    return criterion == Criterion::cv_mar ? "cv-mar" : "ols-partial-F";
}

Criterion parse_criterion(std::string_view text)
{
    if (text == "cv-mar")
        return Criterion::cv_mar;
    if (text == "ols-partial-F" || text == "ols-partial-f")
        return Criterion::ols_partial_f;
    throw ParseError(fmt::format("unknown criterion '{}' (expected cv-mar or ols-partial-F)", text));
}

std::vector<double> default_cp_values()
{
    return {1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001, 0.0};
}

std::pair<SweepPoint, SweepPoint> select_compact(std::span<const SweepPoint> points)
{
    if (points.empty())
        throw ValidationError("select_compact needs at least one point");
    const SweepPoint* best = &points[0];
    for (const auto& p : points)
        if (p.mar < best->mar || (p.mar == best->mar && p.n_variables < best->n_variables))
            best = &p;
    const double limit = 1.10 * best->mar;
    const SweepPoint* compact = nullptr;
    for (const auto& p : points) {
        if (!(p.mar <= limit))
            continue;
        if (compact == nullptr || p.n_variables < compact->n_variables
            || (p.n_variables == compact->n_variables && p.mar < compact->mar))
            compact = &p;
    }
    return {*best, *compact};
}

namespace {

using Columns = std::vector<std::size_t>;

// Shares one fold assignment and one baseline across all candidate
// evaluations of a search, so comparisons are paired.
class Search {
public:
    Search(const Dataset& data, const SelectionConfig& config) : data_(data), config_(config)
    {
        data.validate();
        if (data.cols() == 0)
            throw ValidationError("dataset has no measure columns to select from");
        folds_ = assign_folds(data, config.folds, derive_seed(config.seed, Stream::selection, 0));
        result_.predictor = std::string(to_string(config.predictor.kind));
        result_.strategy = std::string(to_string(config.strategy));
        result_.baseline = random_baseline(data.y, config.baseline_runs, derive_seed(config.seed, Stream::baseline_run, 0));
        if (result_.baseline.degenerate || !(result_.baseline.mean_mar > 0.0))
            throw ValidationError("degenerate dependent variable: random guessing has zero spread, SA and delta are undefined");
        if (config.criterion == Criterion::ols_partial_f && config.predictor.kind != PredictorKind::ols)
            throw ValidationError("the ols-partial-F criterion requires the ols predictor");
        std::size_t min_train = data.rows();
        for (const auto& f : folds_.folds())
            min_train = std::min(min_train, data.rows() - f.size());
        min_train_ = min_train;
    }

    /// Largest subset size the predictor can be cross-validated with.
    std::size_t feasible_size() const
    {
        std::size_t limit = data_.cols();
        if (config_.predictor.kind == PredictorKind::ols || config_.criterion == Criterion::ols_partial_f) {
            const std::size_t ols_limit = std::min(min_train_, data_.rows() - 1);
            limit = std::min(limit, ols_limit >= 2 ? ols_limit - 2 : 0);
        }
        return limit;
    }

    std::size_t min_train() const { return min_train_; }

    SweepPoint evaluate(const Columns& columns)
    {
        Columns key = columns;
        std::sort(key.begin(), key.end());
        {
            std::lock_guard lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end())
                return it->second;
        }
        const auto cv = cross_validate(data_, config_.predictor, columns, folds_);
        SweepPoint p;
        p.columns = key;
        p.n_variables = key.size();
        for (auto c : key)
            p.selected_measures.push_back(data_.measure_ids[c]);
        p.mar = cv.mar;
        p.sa = sa(cv.mar, result_.baseline.mean_mar);
        p.delta = glass_delta(cv.mar, result_.baseline);
        p.fold_mars = cv.fold_mars;
        std::lock_guard lock(mutex_);
        cache_.emplace(key, p);
        return p;
    }

    /// Evaluates each candidate set; failures are recorded and yield nullopt.
    std::vector<std::optional<SweepPoint>> evaluate_all(const std::vector<Columns>& candidates, const std::vector<std::string>& labels)
    {
        std::vector<std::optional<SweepPoint>> out(candidates.size());
        std::vector<std::string> errors(candidates.size());
        parallel_for(candidates.size(), [&](std::size_t i) {
            try {
                out[i] = evaluate(candidates[i]);
            } catch (const ValidationError& e) {
                errors[i] = e.what();
            }
        });
        record_failures(labels, errors);
        return out;
    }

    double residual_sum_squares(const Columns& columns) const
    {
        const auto rows = all_rows(data_);
        const Predictor p = fit_ols(data_, rows, columns);
        const auto& m = std::get<OlsModel>(p.state);
        double rss = 0.0;
        for (std::size_t r = 0; r < data_.rows(); ++r) {
            double v = m.intercept;
            for (std::size_t j = 0; j < columns.size(); ++j)
                v += m.coefficients[j] * data_.at(r, columns[j]);
            rss += (data_.y[r] - v) * (data_.y[r] - v);
        }
        return rss;
    }

    /// p-value of the partial F test comparing `small` against `large`
    /// (one extra column).
    double partial_f_p(const Columns& small, const Columns& large) const
    {
        const double rss_small = residual_sum_squares(small);
        const double rss_large = residual_sum_squares(large);
        const double df2 = static_cast<double>(data_.rows()) - static_cast<double>(large.size()) - 1.0;
        if (!(df2 > 0.0))
            throw ValidationError("partial F test has no residual degrees of freedom");
        if (!(rss_large > 1e-300 * std::max(1.0, rss_small)))
            return rss_small > rss_large ? 0.0 : 1.0;
        const double f = std::max(0.0, (rss_small - rss_large) / (rss_large / df2));
        boost::math::fisher_f dist(1.0, df2);
        return boost::math::cdf(boost::math::complement(dist, f));
    }

    std::vector<std::optional<double>> partial_f_all(const std::vector<std::pair<Columns, Columns>>& pairs, const std::vector<std::string>& labels)
    {
        std::vector<std::optional<double>> out(pairs.size());
        std::vector<std::string> errors(pairs.size());
        parallel_for(pairs.size(), [&](std::size_t i) {
            try {
                out[i] = partial_f_p(pairs[i].first, pairs[i].second);
            } catch (const ValidationError& e) {
                errors[i] = e.what();
            }
        });
        record_failures(labels, errors);
        return out;
    }

    /// Failures of the most recent evaluate_all / partial_f_all call.
    std::string last_failures() const { return fmt::format("{}", fmt::join(last_failures_, "; ")); }

    void accept(SweepPoint p) { result_.trajectory.push_back(std::move(p)); }

    SweepResult finish()
    {
        std::map<std::size_t, SweepPoint> by_size;
        auto keep = [&](const SweepPoint& p) {
            auto it = by_size.find(p.n_variables);
            if (it == by_size.end() || p.mar < it->second.mar)
                by_size[p.n_variables] = p;
        };
        for (const auto& p : result_.trajectory)
            keep(p);
        if (by_size.find(0) == by_size.end())
            keep(evaluate({}));
        for (auto& [size, p] : by_size)
            result_.points.push_back(p);
        std::tie(result_.best, result_.compact) = select_compact(result_.points);
        return std::move(result_);
    }

    std::string label(std::string_view verb, std::size_t column) const
    {
        return fmt::format("{} {}", verb, data_.measure_ids[column]);
    }

    const Dataset& data() const { return data_; }
    const SelectionConfig& config() const { return config_; }

private:
    void record_failures(const std::vector<std::string>& labels, const std::vector<std::string>& errors)
    {
        last_failures_.clear();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (errors[i].empty())
                continue;
            last_failures_.push_back(fmt::format("{}: {}", labels[i], errors[i]));
            result_.skipped.push_back(last_failures_.back());
        }
    }

    const Dataset& data_;
    const SelectionConfig& config_;
    FoldAssignment folds_;
    SweepResult result_;
    std::size_t min_train_ = 0;
    std::mutex mutex_;
    std::map<Columns, SweepPoint> cache_;
    std::vector<std::string> last_failures_;
};

// Lowest MAR; ties keep the earliest candidate.
std::optional<std::size_t> argmin(const std::vector<std::optional<SweepPoint>>& points)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i] && (!best || points[i]->mar < points[*best]->mar))
            best = i;
    return best;
}

std::optional<std::size_t> argmin(const std::vector<std::optional<double>>& values)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] && (!best || *values[i] < *values[*best]))
            best = i;
    return best;
}

std::optional<std::size_t> argmax(const std::vector<std::optional<double>>& values)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] && (!best || *values[i] > *values[*best]))
            best = i;
    return best;
}

Columns with(const Columns& s, std::size_t c)
{
    Columns out = s;
    out.push_back(c);
    return out;
}

Columns without(const Columns& s, std::size_t c)
{
    Columns out;
    for (auto v : s)
        if (v != c)
            out.push_back(v);
    return out;
}

std::vector<std::size_t> excluded(const Dataset& data, const Columns& current)
{
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < data.cols(); ++c)
        if (std::find(current.begin(), current.end(), c) == current.end())
            out.push_back(c);
    return out;
}

// One forward step. Returns false when the search should stop.
bool forward_step(Search& search, Columns& current, double& criterion, bool forced)
{
    const auto& config = search.config();
    const auto candidates = excluded(search.data(), current);
    if (candidates.empty())
        return false;
    std::vector<std::string> labels;
    for (auto c : candidates)
        labels.push_back(search.label("add", c));
    if (config.criterion == Criterion::ols_partial_f) {
        std::vector<std::pair<Columns, Columns>> pairs;
        for (auto c : candidates)
            pairs.emplace_back(current, with(current, c));
        const auto p_values = search.partial_f_all(pairs, labels);
        const auto best = argmin(p_values);
        if (!best)
            throw ValidationError(fmt::format("no candidate variable could be evaluated; skipped: {}", search.last_failures()));
        if (!forced && !(*p_values[*best] < config.f_enter_alpha))
            return false;
        current.push_back(candidates[*best]);
        auto point = search.evaluate(current);
        criterion = point.mar;
        search.accept(std::move(point));
        return true;
    }
    std::vector<Columns> sets;
    for (auto c : candidates)
        sets.push_back(with(current, c));
    const auto points = search.evaluate_all(sets, labels);
    const auto best = argmin(points);
    if (!best)
        throw ValidationError(fmt::format("no candidate variable could be evaluated; skipped: {}", search.last_failures()));
    if (!forced && !(criterion - points[*best]->mar > config.improvement_epsilon))
        return false;
    current.push_back(candidates[*best]);
    criterion = points[*best]->mar;
    search.accept(*points[*best]);
    return true;
}

} // namespace

SweepResult forward_select(const Dataset& data, const SelectionConfig& config)
{
    Search search(data, config);
    const std::size_t limit = std::min({config.max_variables, data.cols(), search.feasible_size()});
    Columns current;
    auto start = search.evaluate(current);
    double criterion = start.mar;
    search.accept(start);
    while (current.size() < limit && forward_step(search, current, criterion, current.size() < config.min_variables)) {
    }
    return search.finish();
}

SweepResult backward_eliminate(const Dataset& data, const SelectionConfig& config)
{
    Search search(data, config);
    if (search.feasible_size() < data.cols())
        throw ValidationError(fmt::format(
            "backward elimination needs a full-model fit on all {} measures, but cross-validation folds train on only {} systems; use forward selection",
            data.cols(), search.min_train()));
    Columns current(data.cols());
    std::iota(current.begin(), current.end(), 0);
    SweepPoint full;
    try {
        full = search.evaluate(current);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("backward elimination cannot fit the full model: {}; use forward selection", e.what()));
    }
    double criterion = full.mar;
    search.accept(full);
    while (!current.empty()) {
        std::vector<std::string> labels;
        for (auto c : current)
            labels.push_back(search.label("remove", c));
        std::size_t chosen = 0;
        if (config.criterion == Criterion::ols_partial_f) {
            std::vector<std::pair<Columns, Columns>> pairs;
            for (auto c : current)
                pairs.emplace_back(without(current, c), current);
            const auto p_values = search.partial_f_all(pairs, labels);
            const auto worst = argmax(p_values);
            if (!worst)
                throw ValidationError(fmt::format("no variable removal could be evaluated; skipped: {}", search.last_failures()));
            if (!(*p_values[*worst] > config.f_remove_alpha))
                break;
            chosen = *worst;
            current = without(current, current[chosen]);
            auto point = search.evaluate(current);
            criterion = point.mar;
            search.accept(std::move(point));
            continue;
        }
        std::vector<Columns> sets;
        for (auto c : current)
            sets.push_back(without(current, c));
        const auto points = search.evaluate_all(sets, labels);
        const auto best = argmin(points);
        if (!best)
            throw ValidationError(fmt::format("no variable removal could be evaluated; skipped: {}", search.last_failures()));
        if (!(criterion - points[*best]->mar > config.improvement_epsilon))
            break;
        chosen = *best;
        current = without(current, current[chosen]);
        criterion = points[*best]->mar;
        search.accept(*points[*best]);
    }
    return search.finish();
}

SweepResult bidirectional_eliminate(const Dataset& data, const SelectionConfig& config)
{
    Search search(data, config);
    const std::size_t limit = std::min({config.max_variables, data.cols(), search.feasible_size()});
    Columns current;
    auto start = search.evaluate(current);
    double criterion = start.mar;
    search.accept(start);
    std::set<Columns> visited{Columns{}};
    auto key = [](Columns s) {
        std::sort(s.begin(), s.end());
        return s;
    };

    if (config.criterion == Criterion::ols_partial_f) {
        while (true) {
            const bool forced = current.size() < config.min_variables;
            if (current.size() >= limit || !forward_step(search, current, criterion, forced))
                break;
            visited.insert(key(current));
            // Drop the least significant variable while it fails the removal test.
            while (current.size() > 1) {
                std::vector<std::pair<Columns, Columns>> pairs;
                std::vector<std::string> labels;
                for (auto c : current) {
                    pairs.emplace_back(without(current, c), current);
                    labels.push_back(search.label("remove", c));
                }
                const auto p_values = search.partial_f_all(pairs, labels);
                const auto worst = argmax(p_values);
                if (!worst || !(*p_values[*worst] > config.f_remove_alpha))
                    break;
                auto next = without(current, current[*worst]);
                if (visited.count(key(next)) > 0)
                    break;
                current = std::move(next);
                visited.insert(key(current));
                auto point = search.evaluate(current);
                criterion = point.mar;
                search.accept(std::move(point));
            }
        }
        return search.finish();
    }

    while (true) {
        const bool forced = current.size() < config.min_variables;
        std::vector<Columns> sets;
        std::vector<std::string> labels;
        if (current.size() < limit) {
            for (auto c : excluded(data, current)) {
                auto next = with(current, c);
                if (visited.count(key(next)) == 0) {
                    sets.push_back(std::move(next));
                    labels.push_back(search.label("add", c));
                }
            }
        }
        if (!forced) {
            for (auto c : current) {
                auto next = without(current, c);
                if (visited.count(key(next)) == 0) {
                    sets.push_back(std::move(next));
                    labels.push_back(search.label("remove", c));
                }
            }
        }
        if (sets.empty())
            break;
        const auto points = search.evaluate_all(sets, labels);
        const auto best = argmin(points);
        if (!best)
            throw ValidationError(fmt::format("no move could be evaluated; skipped: {}", search.last_failures()));
        if (!forced && !(criterion - points[*best]->mar > config.improvement_epsilon))
            break;
        current = sets[*best];
        visited.insert(key(current));
        criterion = points[*best]->mar;
        search.accept(*points[*best]);
    }
    return search.finish();
}

SweepResult cp_sweep(const Dataset& data, const SelectionConfig& config)
{
    if (config.predictor.kind != PredictorKind::cart)
        throw ValidationError("the cp sweep requires the cart predictor");
    if (data.y_kind != YKind::discrete_grade)
        throw ValidationError("CART requires discrete grades");
    if (config.cp_values.empty())
        throw ValidationError("cp sweep needs at least one complexity parameter");
    Search search(data, config);
    Columns all(data.cols());
    std::iota(all.begin(), all.end(), 0);
    const auto folds = assign_folds(data, config.folds, derive_seed(config.seed, Stream::selection, 0));
    std::vector<SweepPoint> points(config.cp_values.size());
    parallel_for(config.cp_values.size(), [&](std::size_t i) {
        PredictorSpec spec = config.predictor;
        spec.cart.complexity_parameter = config.cp_values[i];
        const Predictor tree = fit_cart(data, all, spec.cart);
        const auto used = std::get<DecisionTree>(tree.state).used_features();
        const auto cv = cross_validate(data, spec, all, folds);
        SweepPoint& p = points[i];
        p.cp = config.cp_values[i];
        p.columns = used;
        p.n_variables = used.size();
        for (auto c : used)
            p.selected_measures.push_back(data.measure_ids[c]);
        p.mar = cv.mar;
        p.fold_mars = cv.fold_mars;
    });
    for (auto& p : points)
        search.accept(p);
    SweepResult result = search.finish();
    for (auto* list : {&result.points, &result.trajectory}) {
        for (auto& p : *list) {
            p.sa = sa(p.mar, result.baseline.mean_mar);
            p.delta = glass_delta(p.mar, result.baseline);
        }
    }
    std::tie(result.best, result.compact) = select_compact(result.points);
    return result;
}

SweepResult run_selection(const Dataset& data, const SelectionConfig& config)
{
    switch (config.strategy) {
    case Strategy::forward:
        return forward_select(data, config);
    case Strategy::backward:
        return backward_eliminate(data, config);
    case Strategy::bidirectional:
        return bidirectional_eliminate(data, config);
    case Strategy::cp_sweep:
        return cp_sweep(data, config);
    }
    throw InternalError("unknown strategy");
}

std::string sweep_csv(const SweepResult& result)
{
    std::string out = "n_variables,mar,sa,delta,measures\n";
    for (const auto& p : result.points) {
        out += fmt::format("{},{},{},{},{}\n", p.n_variables, csv::format_number(p.mar), csv::format_number(p.sa),
            csv::format_number(p.delta), csv::escape(fmt::format("{}", fmt::join(p.selected_measures, ";"))));
    }
    return out;
}

namespace {

nlohmann::json point_json(const SweepPoint& p)
{
    nlohmann::json j = {{"n_variables", p.n_variables}, {"measures", p.selected_measures}, {"mar", p.mar}, {"sa", p.sa},
        {"delta", p.delta}, {"fold_mars", p.fold_mars}};
    if (!std::isnan(p.cp))
        j["cp"] = p.cp;
    return j;
}

} // namespace

std::string sweep_json(const SweepResult& result)
{
    nlohmann::json doc;
    doc["predictor"] = result.predictor;
    doc["strategy"] = result.strategy;
    doc["baseline"] = {{"mean_mar", result.baseline.mean_mar}, {"sd_mar", result.baseline.sd_mar},
        {"q5_mar", result.baseline.q5_mar}, {"runs", result.baseline.runs}, {"exact_mean", result.baseline.exact_mean}};
    auto points = nlohmann::json::array();
    for (const auto& p : result.points)
        points.push_back(point_json(p));
    doc["points"] = points;
    auto trajectory = nlohmann::json::array();
    for (const auto& p : result.trajectory)
        trajectory.push_back(point_json(p));
    doc["trajectory"] = trajectory;
    doc["best"] = point_json(result.best);
    doc["compact"] = point_json(result.compact);
    doc["skipped"] = result.skipped;
    return doc.dump(2) + "\n";
}

} // namespace qualens
