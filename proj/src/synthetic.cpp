#include "qualens/synthetic.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"
#include "qualens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>

namespace qualens {

namespace {

constexpr double root_center = 0.94;
constexpr int child_aspects = 3;

double round6(double v)
{
    return std::round(v * 1e6) / 1e6;
}

struct Contribution {
    double min_threshold = 0.0;
    double max_threshold = 1.0;
    Direction direction = Direction::higher_is_more_present;
    Polarity polarity = Polarity::positive;
};

// Thresholds that make the factor's contribution equal
// center + spread * (x - mu) / sigma, up to clamping. The sign of the slope
// follows from the drawn polarity and direction.
Contribution place_thresholds(double mu, double sigma, double center, double spread, Rng& rng)
{
    Contribution c;
    c.polarity = rng.uniform() < 0.5 ? Polarity::positive : Polarity::negative;
    c.direction = rng.uniform() < 0.5 ? Direction::higher_is_more_present : Direction::higher_is_less_present;
    const bool increasing = (c.polarity == Polarity::positive) == (c.direction == Direction::higher_is_more_present);
    const double span = sigma / spread;
    const double at_mu = increasing ? center : 1.0 - center;
    c.min_threshold = round6(mu - at_mu * span);
    c.max_threshold = round6(c.min_threshold + span);
    return c;
}

} // namespace

std::pair<double, double> clamped_normal_moments(double center, double spread)
{
    // Simpson's rule over [-10, 10].
    const int intervals = 4000;
    const double lo = -10.0;
    const double h = 20.0 / intervals;
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double z = lo + h * i;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        const double y = std::clamp(center + spread * z, 0.0, 1.0);
        m1 += w * pdf * y;
        m2 += w * pdf * y * y;
    }
    m1 *= h / 3.0;
    m2 *= h / 3.0;
    return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

SynthCorpus gen_synthetic(const SynthSpec& spec)
{
    if (spec.n_informative < 1)
        throw ValidationError("synthetic corpus needs at least one informative measure");
    if (spec.n_informative + spec.n_expert > spec.n_measures)
        throw ValidationError(fmt::format("informative ({}) plus expert ({}) measures exceed the {} measures",
            spec.n_informative, spec.n_expert, spec.n_measures));
    if (spec.n_systems < 2)
        throw ValidationError("synthetic corpus needs at least 2 systems");
    if (!(spec.expert_weight >= 0.0 && spec.expert_weight < 1.0))
        throw ValidationError("expert_weight must be in [0, 1)");
    if (spec.expert_weight > 0.0 && spec.n_expert == 0)
        throw ValidationError("expert_weight > 0 needs at least one expert measure");
    if (!(spec.noise_sd >= 0.0))
        throw ValidationError("noise_sd must be >= 0");
    const std::size_t n_background = spec.n_measures - spec.n_informative - spec.n_expert;
    if (spec.noise_sd > 0.0 && n_background == 0)
        throw ValidationError("noise_sd > 0 needs at least one background measure");
    if (!(spec.spread > 0.0 && spec.spread <= 1.0))
        throw ValidationError("spread must be in (0, 1]");
    if (!(spec.correlation >= 0.0 && spec.correlation < 1.0))
        throw ValidationError("correlation must be in [0, 1)");

    // Factor centre such that the clamped contribution averages root_center.
    double lo = root_center;
    double hi = 2.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (clamped_normal_moments(mid, spec.spread).first < root_center ? lo : hi) = mid;
    }
    const double center = 0.5 * (lo + hi);
    const double contribution_sd = clamped_normal_moments(center, spec.spread).second;

    Rng rng(spec.seed, Stream::synth_model);
    const int width = std::max(2, static_cast<int>(std::to_string(spec.n_measures).size()));
    std::vector<std::string> ids;
    std::vector<double> mu;
    std::vector<double> sigma;
    for (std::size_t j = 0; j < spec.n_measures; ++j) {
        ids.push_back(fmt::format("m{:0{}}", j + 1, width));
        mu.push_back(round6(rng.uniform(0.0, 10.0)));
        sigma.push_back(round6(rng.uniform(0.5, 2.0)));
    }
    std::vector<std::size_t> roles(spec.n_measures);
    std::iota(roles.begin(), roles.end(), 0);
    rng.shuffle(roles.begin(), roles.end());
    std::vector<std::size_t> informative(roles.begin(), roles.begin() + static_cast<std::ptrdiff_t>(spec.n_informative));
    std::vector<std::size_t> expert(roles.begin() + static_cast<std::ptrdiff_t>(spec.n_informative),
        roles.begin() + static_cast<std::ptrdiff_t>(spec.n_informative + spec.n_expert));
    std::vector<std::size_t> background(roles.begin() + static_cast<std::ptrdiff_t>(spec.n_informative + spec.n_expert), roles.end());
    std::sort(informative.begin(), informative.end());
    std::sort(expert.begin(), expert.end());
    std::sort(background.begin(), background.end());

    // Background share of the root, sized so its contribution has sd noise_sd.
    std::vector<double> background_weights;
    double background_share = 0.0;
    if (spec.noise_sd > 0.0) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < background.size(); ++i) {
            background_weights.push_back(rng.uniform(0.75, 1.25));
            sum += background_weights.back();
            sum_sq += background_weights.back() * background_weights.back();
        }
        const double idiosyncratic_sd = contribution_sd * std::sqrt(1.0 - spec.correlation);
        background_share = spec.noise_sd / (idiosyncratic_sd * std::sqrt(sum_sq) / sum);
        for (auto& w : background_weights)
            w = background_share * w / sum;
        if (background_share + spec.expert_weight > 0.9)
            throw ValidationError(fmt::format(
                "noise_sd {} needs a background share of {:.3f}, which leaves too little weight for the informative measures; lower noise_sd or raise spread",
                spec.noise_sd, background_share));
    }
    const double aspect_share = (1.0 - spec.expert_weight - background_share) / child_aspects;

    // +1 where a higher measure value raises the contribution.
    std::vector<double> orientation(spec.n_measures, 0.0);
    auto orient = [&](std::size_t j, const Contribution& c) {
        const bool increasing = (c.polarity == Polarity::positive) == (c.direction == Direction::higher_is_more_present);
        orientation[j] = increasing ? 1.0 : -1.0;
    };

    QualityModel model;
    model.name = fmt::format("synthetic (seed {})", spec.seed);
    model.root_aspect_id = "maintainability";
    QualityAspect root{"maintainability", "Maintainability", std::nullopt, {}, {}};
    const char* aspect_ids[child_aspects] = {"analysability", "modifiability", "testability"};
    std::vector<QualityAspect> children;
    for (auto* id : aspect_ids) {
        root.child_weights[id] = aspect_share;
        children.push_back({id, id, std::string("maintainability"), {}, {}});
    }
    for (std::size_t j = 0; j < spec.n_measures; ++j) {
        Measure m;
        m.id = ids[j];
        m.name = ids[j];
        m.kind = std::find(expert.begin(), expert.end(), j) != expert.end() ? MeasureKind::manual_expert : MeasureKind::automatic;
        m.unit = MeasureUnit::raw;
        model.measures.push_back(m);
    }

    nlohmann::json truth;
    truth["seed"] = spec.seed;
    truth["withhold_expert"] = spec.withhold_expert;
    truth["root_center"] = root_center;
    truth["factor_center"] = center;
    truth["spread"] = spec.spread;
    truth["expert_weight"] = spec.expert_weight;
    truth["noise_sd"] = spec.noise_sd;
    truth["background_share"] = background_share;
    truth["correlation"] = spec.correlation;
    auto describe = [&](std::size_t j, const Contribution& c, double root_weight, const std::string& aspect) {
        return nlohmann::json{{"measure", ids[j]}, {"root_weight", root_weight}, {"aspect", aspect}, {"mean", mu[j]},
            {"sd", sigma[j]}, {"min_threshold", c.min_threshold}, {"max_threshold", c.max_threshold},
            {"direction", std::string(to_string(c.direction))}, {"polarity", std::string(to_string(c.polarity))}};
    };

    auto add_factor = [&](std::size_t j, const Contribution& c, const std::string& aspect) {
        ProductFactor f;
        f.id = "f-" + ids[j];
        f.entity = "system";
        f.name = ids[j];
        f.evaluation.measures.push_back({ids[j], 1.0});
        f.evaluation.min_threshold = c.min_threshold;
        f.evaluation.max_threshold = c.max_threshold;
        f.evaluation.direction = c.direction;
        f.impacts.push_back({aspect, c.polarity, ""});
        model.factors.push_back(f);
        return f.id;
    };

    auto informative_truth = nlohmann::json::array();
    std::vector<double> factor_weights(spec.n_informative);
    std::vector<double> aspect_totals(child_aspects, 0.0);
    std::vector<Contribution> informative_contrib;
    for (std::size_t i = 0; i < informative.size(); ++i) {
        factor_weights[i] = round6(rng.uniform(0.75, 1.25));
        aspect_totals[i % child_aspects] += factor_weights[i];
        informative_contrib.push_back(place_thresholds(mu[informative[i]], sigma[informative[i]], center, spec.spread, rng));
        orient(informative[i], informative_contrib.back());
    }
    for (std::size_t i = 0; i < informative.size(); ++i) {
        const auto a = i % child_aspects;
        const auto fid = add_factor(informative[i], informative_contrib[i], aspect_ids[a]);
        children[a].factor_weights[fid] = factor_weights[i];
        informative_truth.push_back(describe(informative[i], informative_contrib[i],
            aspect_share * factor_weights[i] / aspect_totals[a], aspect_ids[a]));
    }
    auto expert_truth = nlohmann::json::array();
    for (auto j : expert) {
        const auto c = place_thresholds(mu[j], sigma[j], center, spec.spread, rng);
        orient(j, c);
        const auto fid = add_factor(j, c, "maintainability");
        const double w = spec.expert_weight / static_cast<double>(expert.size());
        root.factor_weights[fid] = w;
        expert_truth.push_back(describe(j, c, w, "maintainability"));
    }
    auto background_truth = nlohmann::json::array();
    if (spec.noise_sd > 0.0) {
        for (std::size_t i = 0; i < background.size(); ++i) {
            const auto j = background[i];
            const auto c = place_thresholds(mu[j], sigma[j], center, spec.spread, rng);
            orient(j, c);
            const auto fid = add_factor(j, c, "maintainability");
            root.factor_weights[fid] = background_weights[i];
            background_truth.push_back(describe(j, c, background_weights[i], "maintainability"));
        }
    } else {
        for (auto j : background) {
            orientation[j] = rng.uniform() < 0.5 ? 1.0 : -1.0;
            background_truth.push_back({{"measure", ids[j]}, {"root_weight", 0.0}, {"mean", mu[j]}, {"sd", sigma[j]}});
        }
    }
    // Aspects with no informative factor would fall back to the neutral
    // utility, so their share is dropped.
    for (int a = 0; a < child_aspects; ++a)
        if (children[static_cast<std::size_t>(a)].factor_weights.empty())
            root.child_weights[aspect_ids[a]] = 0.0;
    truth["informative"] = informative_truth;
    truth["expert"] = expert_truth;
    truth["background"] = background_truth;

    model.aspects.push_back(root);
    for (auto& c : children)
        model.aspects.push_back(c);

    auto draw_systems = [&](std::size_t n, std::uint64_t stream_index, const std::string& prefix, bool with_expert) {
        Rng srng(spec.seed, Stream::synth_systems, stream_index);
        std::vector<SystemMeasurements> out;
        const int digits = std::max(2, static_cast<int>(std::to_string(n).size()));
        for (std::size_t s = 0; s < n; ++s) {
            SystemMeasurements sys;
            sys.system_id = fmt::format("{}{:0{}}", prefix, s + 1, digits);
            const double loc = std::exp(std::log(11000.0) + 0.8 * srng.normal());
            sys.loc = std::max<std::int64_t>(5000, std::llround(loc));
            const double latent = spec.correlation > 0.0 ? srng.normal() : 0.0;
            const double shared = std::sqrt(spec.correlation);
            const double own = std::sqrt(1.0 - spec.correlation);
            for (std::size_t j = 0; j < spec.n_measures; ++j) {
                const double z = shared * orientation[j] * latent + own * srng.normal();
                const double v = round6(mu[j] + sigma[j] * z);
                const bool is_expert = std::find(expert.begin(), expert.end(), j) != expert.end();
                if (!is_expert || with_expert)
                    sys.values[ids[j]] = v;
            }
            out.push_back(std::move(sys));
        }
        return out;
    };

    SynthCorpus corpus;
    corpus.spec = spec;
    corpus.model = std::move(model);
    corpus.training = draw_systems(spec.n_systems, 0, "sys-", !spec.withhold_expert);
    corpus.holdout = draw_systems(spec.n_holdout, 1, "hold-", true);
    for (auto j : informative)
        corpus.informative.push_back(ids[j]);
    for (auto j : expert)
        corpus.expert.push_back(ids[j]);
    for (auto j : background)
        corpus.background.push_back(ids[j]);
    corpus.truth_json = truth.dump(2) + "\n";
    const auto diagnostics = validate_model(corpus.model);
    if (has_errors(diagnostics))
        throw InternalError("generated synthetic model is invalid: " + to_string(diagnostics.front()));
    return corpus;
}

void write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir)
{
    std::vector<std::string> ids;
    for (const auto& m : corpus.model.measures)
        ids.push_back(m.id);
    save_model(corpus.model, dir / "model.json");
    write_text_file(dir / "measures.csv", format_measurements_csv(ids, corpus.training));
    if (!corpus.holdout.empty())
        write_text_file(dir / "holdout.csv", format_measurements_csv(ids, corpus.holdout));
    write_text_file(dir / "truth.json", corpus.truth_json);
}

} // namespace qualens
