// Acceptance checks. Run with a criterion number (1-8) or without arguments
// for all of them; prints one PASS/FAIL line per criterion.

#include "unit/support.hpp"

#include "qualens/evaluation.hpp"
#include "qualens/experiments.hpp"
#include "qualens/model.hpp"
#include "qualens/predictors.hpp"
#include "qualens/selection.hpp"
#include "qualens/stats.hpp"
#include "qualens/synthetic.hpp"
#include "qualens/validation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace qualens;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::size_t> iota_cols(std::size_t k)
{
    std::vector<std::size_t> cols(k);
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
}

Dataset demo_dataset()
{
    const auto model = load_model(test::data_dir() / "maintainability-demo.json");
    const auto systems = read_measurements(test::data_dir() / "demo-corpus.csv", &model);
    return build_dataset(model, systems, YKind::discrete_grade);
}

Outcome c1_formula()
{
    const double v = sa(0.37, 1.07);
    const bool pass = std::round(v * 1000.0) / 1000.0 == 0.654 && std::abs(v - 0.6564) <= 0.02;
    return {pass, fmt::format("sa(0.37, 1.07) = {:.4f}, reported 0.6564", v)};
}

Outcome c2_baseline()
{
    Timer t;
    auto d = demo_dataset();
    const double exact = exact_baseline_mar(d.y);
    const auto b = random_baseline(d.y, 100000, 42);
    const double rel = std::abs(b.mean_mar - exact) / exact;

    PredictorSpec spec;
    spec.kind = PredictorKind::random_guess;
    std::vector<double> sas;
    for (std::uint64_t r = 0; r < 1000; ++r) {
        spec.seed = derive_seed(42, Stream::experiment, r);
        sas.push_back(sa(cross_validate(d, spec, {}, 4, spec.seed).mar, b.mean_mar));
    }
    const double mean_sa = stats::mean(sas);
    const double secs = t.seconds();
    const bool pass = d.rows() == 30 && rel <= 0.01 && std::abs(mean_sa) <= 0.03 && secs < 10.0;
    return {pass, fmt::format("n={} mc={:.5f} exact={:.5f} rel={:.3f}% guess_sa={:+.4f} time={:.1f}s",
                      d.rows(), b.mean_mar, exact, 100.0 * rel, mean_sa, secs)};
}

Outcome c3_oracles()
{
    double worst_ols = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto d = test::gaussian_dataset(50, 3, 1000 + seed);
        Rng rng(seed, Stream::resample);
        for (std::size_t r = 0; r < d.rows(); ++r)
            d.y[r] = 3.5 + rng.uniform(-1, 1) * d.at(r, 0) + 0.5 * d.at(r, 1) - 0.2 * d.at(r, 2) + 0.4 * rng.normal();
        const auto oracle = test::normal_equations(d, iota_cols(3));
        const auto m = std::get<OlsModel>(fit_ols(d, iota_cols(3)).state);
        worst_ols = std::max(worst_ols, std::abs(m.intercept - oracle[0]));
        for (std::size_t j = 0; j < 3; ++j)
            worst_ols = std::max(worst_ols, std::abs(m.coefficients[j] - oracle[j + 1]));
    }

    std::size_t cart_ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto d = test::grade_dataset(20, 4, 2000 + seed);
        const auto tree = std::get<DecisionTree>(fit_cart(d, iota_cols(4), CartParams{0.0, 1, 20}).state);
        const auto candidates = test::enumerate_splits(d, 1);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : candidates)
            best = std::min(best, c.weighted_gini);
        const auto& root = tree.nodes.front();
        for (const auto& c : candidates)
            if (c.feature == root.feature && c.threshold == root.threshold && std::abs(c.weighted_gini - best) <= 1e-12)
                ++cart_ok;
    }

    std::size_t mismatches = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = test::grade_dataset(100, 4, 3000 + seed);
        ForestParams fp;
        fp.n_trees = 1;
        fp.bootstrap = false;
        fp.m_try = 4;
        const auto forest = fit_forest(d, iota_cols(4), fp, seed);
        const auto cart = fit_cart(d, iota_cols(4), fp.cart);
        const auto probe = test::grade_dataset(200, 4, 4000 + seed);
        for (std::size_t r = 0; r < probe.rows(); ++r)
            mismatches += predict(forest, probe.row(r)) != predict(cart, probe.row(r));
    }
    const bool pass = worst_ols <= 1e-8 && cart_ok == 10 && mismatches == 0;
    return {pass, fmt::format("ols max |diff|={:.2e} cart root splits {}/10 forest-vs-cart mismatches={}", worst_ols, cart_ok, mismatches)};
}

Outcome c4_recovery()
{
    Timer t;
    SynthSpec spec;
    const auto corpus = gen_synthetic(spec);
    const auto d = build_dataset(corpus.model, corpus.training, YKind::continuous_grade);
    SelectionConfig config;
    config.predictor.kind = PredictorKind::ols;
    config.max_variables = 20;
    const auto r = forward_select(d, config);
    const std::set<std::string> chosen(r.compact.selected_measures.begin(), r.compact.selected_measures.end());
    const std::set<std::string> truth(corpus.informative.begin(), corpus.informative.end());
    const double secs = t.seconds();
    const bool pass = chosen == truth && r.compact.sa >= 0.95 && secs < 120.0;
    return {pass, fmt::format("compact n={} exact_match={} sa={:.4f} time={:.1f}s", r.compact.n_variables, chosen == truth, r.compact.sa, secs)};
}

// Corpus graded with five expert measures that predictors never see: the
// unobserved share acts as noise and clamped ramps make the signal nonlinear.
Outcome c5_paper_shape()
{
    Timer t;
    SynthSpec spec;
    spec.spread = 0.5;
    spec.correlation = 0.3;
    spec.n_expert = 5;
    spec.expert_weight = 0.3;
    spec.withhold_expert = false;
    const auto corpus = gen_synthetic(spec);
    const auto d = without_expert_columns(build_dataset(corpus.model, corpus.training, YKind::discrete_grade));

    SelectionConfig base;
    base.max_variables = 20;
    base.min_variables = 10;
    const auto configs = standard_configs(base);
    const auto result = run_rq1(d, configs, base.folds, base.seed);

    std::string best_name;
    double best_sa = -1.0;
    double rf_best_sa = 0.0;
    double rf_best_mar = 0.0;
    double rf_ten_mar = std::numeric_limits<double>::infinity();
    std::string summary;
    for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
        const auto& s = result.sweeps[i];
        summary += fmt::format(" {}={:.3f}", configs[i].name, s.best.sa);
        if (s.best.sa > best_sa) {
            best_sa = s.best.sa;
            best_name = configs[i].name;
        }
        if (configs[i].name == "random-forest-forward") {
            rf_best_sa = s.best.sa;
            rf_best_mar = s.best.mar;
            for (const auto& p : s.points)
                if (p.n_variables == 10)
                    rf_ten_mar = p.mar;
        }
    }
    const double secs = t.seconds();
    const bool pass = best_name == "random-forest-forward" && rf_ten_mar <= 1.10 * rf_best_mar && secs < 600.0;
    return {pass, fmt::format("best SA by config:{}; rf best={:.3f} rf 10-var MAR/best MAR={:.3f} time={:.0f}s",
                      summary, rf_best_sa, rf_ten_mar / rf_best_mar, secs)};
}

Outcome c6_rq2()
{
    Timer t;
    const std::vector<std::size_t> counts{6, 8, 10, 12, 14, 16};
    auto medians = [&](double expert_weight) {
        std::vector<std::vector<double>> automated(counts.size());
        std::vector<std::vector<double>> expert(counts.size());
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            SynthSpec spec;
            spec.n_systems = 300;
            spec.n_measures = 40;
            spec.n_expert = 4;
            spec.expert_weight = expert_weight;
            spec.seed = seed;
            const auto corpus = gen_synthetic(spec);
            EvaluationOptions automated_only;
            automated_only.automated_only = true;
            const auto train = without_expert_columns(build_dataset(corpus.model, corpus.training, YKind::continuous_grade, automated_only));
            const auto holdout = build_dataset(corpus.model, corpus.holdout, YKind::continuous_grade);
            SelectionConfig config;
            config.predictor.kind = PredictorKind::ols;
            config.seed = seed;
            config.baseline_runs = 2000;
            const auto report = run_rq2(train, holdout, config, counts, 2);
            for (std::size_t i = 0; i < counts.size(); ++i) {
                automated[i].push_back(report.sa_automated_only[i]);
                expert[i].push_back(report.sa_with_expert_truth[i]);
            }
        }
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < counts.size(); ++i)
            out.emplace_back(stats::median(automated[i]), stats::median(expert[i]));
        return out;
    };

    const auto with_expert = medians(0.4);
    const auto without_expert = medians(0.0);
    bool degraded = true;
    bool agree = true;
    std::string detail;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        degraded = degraded && with_expert[i].second < with_expert[i].first;
        agree = agree && std::abs(without_expert[i].second - without_expert[i].first) <= 0.05;
        detail += fmt::format(" {}:{:.3f}/{:.3f}|{:.3f}/{:.3f}", counts[i], with_expert[i].first, with_expert[i].second,
            without_expert[i].first, without_expert[i].second);
    }
    const double secs = t.seconds();
    return {degraded && agree, fmt::format("count:auto/expert-truth at w=0.4 | w=0;{} degraded={} agree={} time={:.0f}s",
                                   detail, degraded, agree, secs)};
}

Outcome c7_evaluation()
{
    std::size_t failures = 0;
    const auto bands = default_grade_bands();
    const std::vector<GradeBand> expected{{0.0, 6}, {0.90, 5}, {0.92, 4}, {0.94, 3}, {0.96, 2}, {0.98, 1}};
    failures += bands != expected;
    const std::vector<std::pair<double, int>> table{{0.0, 6}, {0.8999, 6}, {0.90, 5}, {0.9199, 5}, {0.92, 4}, {0.94, 3}, {0.95, 3},
        {0.96, 2}, {0.98, 1}, {1.0, 1}};
    for (const auto& [u, g] : table)
        failures += to_grade(u, bands).discrete != g;

    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double lo = rng.uniform(-100.0, 100.0);
        const double hi = lo + rng.uniform(1e-6, 50.0);
        const auto dir = rng.uniform() < 0.5 ? Direction::higher_is_more_present : Direction::higher_is_less_present;
        const bool more = dir == Direction::higher_is_more_present;
        failures += normalize_measure(lo, lo, hi, dir) != (more ? 0.0 : 1.0);
        failures += normalize_measure(hi, lo, hi, dir) != (more ? 1.0 : 0.0);
        const double a = rng.uniform(lo - 10.0, hi + 10.0);
        const double b = rng.uniform(lo - 10.0, hi + 10.0);
        const double ua = normalize_measure(std::min(a, b), lo, hi, dir);
        const double ub = normalize_measure(std::max(a, b), lo, hi, dir);
        failures += ua < 0.0 || ua > 1.0 || ub < 0.0 || ub > 1.0;
        failures += more ? ua > ub : ua < ub;
    }

    for (int trial = 0; trial < 1000; ++trial) {
        QualityModel m;
        m.root_aspect_id = "root";
        m.aspects.push_back({"root", "root", std::nullopt, {}, {}});
        const std::size_t n_children = 1 + rng.index(3);
        for (std::size_t c = 0; c < n_children; ++c) {
            const std::string id = fmt::format("a{}", c);
            m.aspects.push_back({id, id, std::string("root"), {}, {}});
            m.aspects[0].child_weights[id] = rng.uniform(0.1, 3.0);
        }
        SystemMeasurements s;
        const std::size_t n_factors = 1 + rng.index(6);
        for (std::size_t f = 0; f < n_factors; ++f) {
            ProductFactor pf;
            pf.id = fmt::format("f{}", f);
            const std::string mid = fmt::format("m{}", f);
            pf.evaluation.measures = {{mid, 1.0}};
            s.values[mid] = rng.uniform(-0.2, 1.2);
            const std::size_t target = rng.index(n_children + 1);
            pf.impacts.push_back({m.aspects[target].id, rng.uniform() < 0.5 ? Polarity::positive : Polarity::negative, ""});
            m.aspects[target].factor_weights[pf.id] = rng.uniform(0.1, 3.0);
            m.factors.push_back(pf);
        }
        const double before = evaluate_system(m, s).root_utility;
        for (auto& a : m.aspects) {
            const double c = std::exp(rng.uniform(-3.0, 3.0));
            for (auto& [k, w] : a.child_weights)
                w *= c;
            for (auto& [k, w] : a.factor_weights)
                w *= c;
        }
        failures += std::abs(evaluate_system(m, s).root_utility - before) > 1e-12;
    }
    return {failures == 0, fmt::format("grade table, 10^4 normalize specs, 10^3 scaled models: {} failures", failures)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome c8_determinism()
{
    const fs::path root = fs::temp_directory_path() / "qualens-acceptance-c8";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string cli = QUALENS_CLI_PATH;
    const std::string model = (test::data_dir() / "maintainability-demo.json").string();
    const std::string corpus = (test::data_dir() / "demo-corpus.csv").string();
    const std::string sys_a = (test::data_dir() / "sys-A.csv").string();

    // Each command writes into the directory given as {dir}; inputs come from
    // the shared setup below.
    const fs::path inputs = root / "inputs";
    fs::create_directories(inputs);
    const std::string in = inputs.string();
    auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
    if (sh(fmt::format("{} synth --out {} --systems 80 --measures 12 --informative 4 --expert 2 --expert-weight 0.4", cli, in)) != 0
        || sh(fmt::format("{} dataset --model {} --measures {} --y-kind discrete-grade --out {}/demo.csv", cli, model, corpus, in)) != 0
        || sh(fmt::format("{} sweep --dataset {}/demo.csv --predictor random-forest --trees 10 --max-vars 3 --baseline-runs 500 --save-predictor {}/rf.json",
               cli, in, in)) != 0)
        return {false, "could not prepare inputs"};

    const std::vector<std::pair<std::string, std::string>> commands{
        {"evaluate", fmt::format("evaluate --model {} --measures {} --out {{dir}}/out.csv --detail-dir {{dir}}/detail", model, corpus)},
        {"evaluate-json", fmt::format("evaluate --model {} --measures {} --format json --out {{dir}}/out.json", model, sys_a)},
        {"calibrate", fmt::format("calibrate --measures {} --model {} --out {{dir}}/out.json", corpus, model)},
        {"dataset", fmt::format("dataset --model {} --measures {} --out {{dir}}/out.csv", model, corpus)},
        {"synth", "synth --out {dir} --systems 60 --measures 10 --informative 3 --expert 2 --expert-weight 0.3 --noise-sd 0.002"},
        {"sweep-all", fmt::format("sweep --dataset {}/demo.csv --predictor all --trees 10 --max-vars 3 --min-leaf 3 --baseline-runs 500 "
                                  "--guess-evaluations 50 --scorecards {{dir}}/sc.csv --plot-data {{dir}}/plot.tsv --out {{dir}}/out.csv",
                          in)},
        {"sweep-rf", fmt::format("sweep --dataset {}/demo.csv --predictor random-forest --trees 20 --max-vars 3 --baseline-runs 500 "
                                 "--format json --save-predictor {{dir}}/p.json --out {{dir}}/out.json",
                         in)},
        {"rq2", fmt::format("rq2 --model {0}/model.json --measures {0}/measures.csv --holdout {0}/holdout.csv --trees 10 --counts 2,4 "
                            "--resamples 50 --baseline-runs 500 --out {{dir}}/out.csv",
                    in)},
        {"baseline", fmt::format("baseline --dataset {}/demo.csv --runs 20000 --out {{dir}}/out.csv", in)},
        {"predict", fmt::format("predict --predictor {0}/rf.json --dataset {0}/demo.csv --out {{dir}}/out.csv", in)},
    };

    auto run_all = [&](const std::string& threads, int rep) {
        std::map<std::string, std::uint64_t> hashes;
        for (const auto& [name, args] : commands) {
            const fs::path dir = root / fmt::format("{}-t{}-r{}", name, threads, rep);
            fs::create_directories(dir);
            std::string line = args;
            for (std::size_t pos; (pos = line.find("{dir}")) != std::string::npos;)
                line.replace(pos, 5, dir.string());
            const int code = sh(fmt::format("QUALENS_THREADS={} {} {} --seed 42", threads, cli, line));
            std::string all = fmt::format("exit={}\n", code);
            std::vector<fs::path> files;
            for (const auto& e : fs::recursive_directory_iterator(dir))
                if (e.is_regular_file())
                    files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files)
                all += fs::relative(f, dir).string() + "\n" + slurp(f);
            hashes[name] = code == 0 ? test::fnv1a(all) : 0;
        }
        return hashes;
    };

    const auto a = run_all("1", 1);
    const auto b = run_all("1", 2);
    const auto c = run_all("4", 1);
    const auto d = run_all("4", 2);
    std::size_t failed = 0;
    std::string detail;
    for (const auto& [name, h] : a) {
        const bool ok = h != 0 && b.at(name) == h && c.at(name) == h && d.at(name) == h;
        failed += !ok;
        detail += fmt::format(" {}={:016x}{}", name, h, ok ? "" : "(differs)");
    }
    return {failed == 0, fmt::format("{} commands x 2 runs x threads {{1,4}}:{}", commands.size(), detail)};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"formula fixture", c1_formula},
        {"baseline convergence", c2_baseline},
        {"oracle equivalence", c3_oracles},
        {"recovery", c4_recovery},
        {"paper shape", c5_paper_shape},
        {"rq2 degradation", c6_rq2},
        {"evaluation engine", c7_evaluation},
        {"determinism", c8_determinism},
    };
    std::vector<std::size_t> selected;
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::cerr << "usage: acceptance [1-8]\n";
            return 64;
        }
        selected.push_back(static_cast<std::size_t>(n - 1));
    } else {
        selected.resize(criteria.size());
        std::iota(selected.begin(), selected.end(), 0);
    }

    int failed = 0;
    for (auto i : selected) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::cout << fmt::format("criterion {} ({}): {} {}", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail) << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
