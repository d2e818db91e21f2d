#include "qualens/validation.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"
#include "qualens/parallel.hpp"
#include "qualens/rng.hpp"
#include "qualens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <numeric>

namespace qualens {

double mar(std::span<const double> y, std::span<const double> yhat)
{
    if (y.size() != yhat.size())
        throw ValidationError(fmt::format("MAR: {} observed values but {} predictions", y.size(), yhat.size()));
    if (y.empty())
        throw ValidationError("MAR: no values");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        sum += std::abs(y[i] - yhat[i]);
    return sum / static_cast<double>(y.size());
}

double sa(double mar_p, double baseline_mean_mar)
{
    if (!(baseline_mean_mar > 0.0))
        throw ValidationError("SA: baseline MAR must be positive (degenerate baseline)");
    return 1.0 - mar_p / baseline_mean_mar;
}

double glass_delta(double mar_p, const BaselineStats& baseline)
{
    if (!(baseline.sd_mar > 0.0))
        throw ValidationError("Glass's delta: baseline standard deviation is zero");
    return (baseline.mean_mar - mar_p) / baseline.sd_mar;
}

std::string_view to_string(EffectLabel label)
{
    switch (label) {
    case EffectLabel::negligible:
        return "negligible";
    case EffectLabel::small:
        return "small";
    case EffectLabel::medium:
        return "medium";
    case EffectLabel::large:
        return "large";
    }
    return "?";
}

EffectLabel effect_label(double delta)
{
    if (delta < 0.1)
        return EffectLabel::negligible;
    if (delta < 0.35)
        return EffectLabel::small;
    if (delta <= 0.65)
        return EffectLabel::medium;
    return EffectLabel::large;
}

BaselineStats random_baseline(std::span<const double> y, std::size_t runs, std::uint64_t seed)
{
    const std::size_t n = y.size();
    if (n < 2)
        throw ValidationError(fmt::format("random baseline needs at least 2 values, has {}", n));
    if (runs < 1)
        throw ValidationError("random baseline needs at least 1 run");
    std::vector<double> mars(runs);
    parallel_for(runs, [&](std::size_t i) {
        Rng rng(seed, Stream::baseline_run, i);
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            auto r = static_cast<std::size_t>(rng.index(n - 1));
            if (r >= t)
                ++r;
            sum += std::abs(y[t] - y[r]);
        }
        mars[i] = sum / static_cast<double>(n);
    });
    BaselineStats out;
    out.runs = runs;
    out.mean_mar = stats::mean(mars);
    out.sd_mar = runs > 1 ? stats::sample_sd(mars) : 0.0;
    out.q5_mar = stats::quantile(mars, 0.05);
    out.exact_mean = exact_baseline_mar(y);
    const auto [lo, hi] = std::minmax_element(mars.begin(), mars.end());
    out.degenerate = *lo == *hi;
    if (out.degenerate)
        out.sd_mar = 0.0;
    return out;
}

double exact_baseline_mar(std::span<const double> y)
{
    const std::size_t n = y.size();
    if (n < 2)
        throw ValidationError(fmt::format("exact baseline needs at least 2 values, has {}", n));
    // Sum of pairwise distances via the sorted-prefix identity.
    std::vector<double> s(y.begin(), y.end());
    std::sort(s.begin(), s.end());
    double prefix = 0.0;
    double pair_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pair_sum += static_cast<double>(i) * s[i] - prefix;
        prefix += s[i];
    }
    return 2.0 * pair_sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<std::vector<std::size_t>> FoldAssignment::folds() const
{
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t r = 0; r < fold_of.size(); ++r)
        out[fold_of[r]].push_back(r);
    return out;
}

FoldAssignment assign_folds(const Dataset& data, std::size_t k, std::uint64_t seed)
{
    if (k < 2)
        throw ValidationError(fmt::format("cross-validation needs k >= 2, got {}", k));
    if (k > data.rows())
        throw ValidationError(fmt::format("cross-validation with k = {} exceeds the {} systems", k, data.rows()));
    auto order = canonical_order(data);
    Rng rng(seed, Stream::folds);
    rng.shuffle(order.begin(), order.end());
    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    out.fold_of.assign(data.rows(), 0);
    for (std::size_t i = 0; i < order.size(); ++i)
        out.fold_of[order[i]] = i % k;
    return out;
}

CrossValidation cross_validate(const Dataset& data, const PredictorSpec& spec, std::span<const std::size_t> columns,
    const FoldAssignment& assignment)
{
    if (assignment.fold_of.size() != data.rows())
        throw ValidationError("fold assignment does not match the dataset");
    const auto folds = assignment.folds();
    const std::size_t k = assignment.k;
    // k - 1 rather than k so that leave-one-out (k = n) stays admissible.
    const std::size_t min_train = std::max(k - 1, columns.size() + 2);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t train = data.rows() - folds[f].size();
        if (train < min_train)
            throw ValidationError(fmt::format("fold too small: fold {} trains on {} systems, needs at least {}", f, train, min_train));
    }

    CrossValidation out;
    out.fold_mars.assign(k, 0.0);
    out.predictions.assign(data.rows(), 0.0);
    parallel_for(k, [&](std::size_t f) {
        std::vector<std::size_t> train;
        for (std::size_t r = 0; r < data.rows(); ++r)
            if (assignment.fold_of[r] != f)
                train.push_back(r);
        PredictorSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, Stream::folds, f + 1);
        const Predictor p = fit(data, train, columns, fold_spec);
        std::vector<double> y;
        std::vector<double> yhat;
        if (spec.kind == PredictorKind::random_guess) {
            Rng rng(spec.seed, Stream::random_guess, f);
            for (auto r : folds[f]) {
                y.push_back(data.y[r]);
                yhat.push_back(predict_random(p, rng));
            }
        } else {
            for (auto r : folds[f]) {
                y.push_back(data.y[r]);
                yhat.push_back(predict(p, data.row(r)));
            }
        }
        for (std::size_t i = 0; i < folds[f].size(); ++i)
            out.predictions[folds[f][i]] = yhat[i];
        out.fold_mars[f] = mar(y, yhat);
    });
    out.mar = stats::mean(out.fold_mars);
    return out;
}

CrossValidation cross_validate(const Dataset& data, const PredictorSpec& spec, std::span<const std::size_t> columns,
    std::size_t k, std::uint64_t seed)
{
    return cross_validate(data, spec, columns, assign_folds(data, k, seed));
}

Scorecard make_scorecard(std::string predictor, std::string strategy, double mar_p, const BaselineStats& baseline)
{
    Scorecard card;
    card.predictor = std::move(predictor);
    card.strategy = std::move(strategy);
    card.mar = mar_p;
    card.sa = sa(mar_p, baseline.mean_mar);
    card.delta = glass_delta(mar_p, baseline);
    card.effect_label = effect_label(card.delta);
    return card;
}

std::string scorecards_csv(std::span<const Scorecard> cards)
{
    std::string out = "predictor,strategy,n_variables,mar,sa,delta,effect_label\n";
    for (const auto& c : cards) {
        out += fmt::format("{},{},{},{},{},{},{}\n", csv::escape(c.predictor), csv::escape(c.strategy), c.n_variables,
            csv::format_number(c.mar), csv::format_number(c.sa), csv::format_number(c.delta), to_string(c.effect_label));
    }
    return out;
}

std::string scorecards_json(std::span<const Scorecard> cards, const BaselineStats& baseline)
{
    nlohmann::json doc;
    doc["baseline"] = {{"mean_mar", baseline.mean_mar}, {"sd_mar", baseline.sd_mar}, {"q5_mar", baseline.q5_mar},
        {"runs", baseline.runs}, {"exact_mean", baseline.exact_mean}, {"degenerate", baseline.degenerate}};
    auto arr = nlohmann::json::array();
    for (const auto& c : cards) {
        arr.push_back({{"predictor", c.predictor}, {"strategy", c.strategy}, {"n_variables", c.n_variables}, {"mar", c.mar},
            {"sa", c.sa}, {"delta", c.delta}, {"effect_label", std::string(to_string(c.effect_label))},
            {"fold_mars", c.fold_mars}, {"variables", c.variables}});
    }
    doc["scorecards"] = arr;
    return doc.dump(2) + "\n";
}

} // namespace qualens
