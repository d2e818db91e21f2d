#include "qualens/experiments.hpp"

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

Dataset build_dataset(const QualityModel& model, std::span<const SystemMeasurements> systems, YKind y_kind,
    const EvaluationOptions& options, std::vector<Diagnostic>* warnings)
{
    if (systems.empty())
        throw ValidationError("no systems to build a dataset from");
    const std::size_t n = systems.size();
    std::vector<EvaluationResult> results(n);
    parallel_for(n, [&](std::size_t i) { results[i] = evaluate_system(model, systems[i], options); });

    Dataset data;
    data.y_kind = y_kind;
    std::vector<std::vector<double>> columns;
    for (const auto& m : model.measures) {
        std::vector<double> column(n, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> present;
        for (std::size_t i = 0; i < n; ++i) {
            auto it = systems[i].values.find(m.id);
            if (it == systems[i].values.end() || std::isnan(it->second))
                continue;
            double v = it->second;
            if (m.unit == MeasureUnit::count)
                v /= static_cast<double>(systems[i].loc) / 1000.0;
            column[i] = v;
            present.push_back(v);
        }
        if (present.empty()) {
            if (warnings)
                warnings->push_back({Severity::warning, "dataset", fmt::format("measure '{}' is missing for every system; column dropped", m.id)});
            continue;
        }
        if (present.size() < n) {
            const double fill = stats::median(present);
            for (auto& v : column)
                if (std::isnan(v))
                    v = fill;
            if (warnings)
                warnings->push_back({Severity::warning, "dataset",
                    fmt::format("measure '{}' is missing for {} of {} systems; filled with the median {}", m.id, n - present.size(), n, csv::format_number(fill))});
        }
        data.measure_ids.push_back(m.id);
        data.expert_flags.push_back(m.kind == MeasureKind::manual_expert);
        columns.push_back(std::move(column));
    }
    data.x.resize(n * columns.size());
    for (std::size_t i = 0; i < n; ++i) {
        data.system_ids.push_back(systems[i].system_id);
        data.y.push_back(y_kind == YKind::discrete_grade ? static_cast<double>(results[i].grade.discrete) : results[i].grade.continuous);
        for (std::size_t c = 0; c < columns.size(); ++c)
            data.x[i * columns.size() + c] = columns[c][i];
    }
    return data;
}

std::vector<PredictorConfig> standard_configs(const SelectionConfig& base)
{
    std::vector<PredictorConfig> out;
    auto add = [&](std::string name, PredictorKind kind, Strategy strategy) {
        SelectionConfig c = base;
        c.predictor.kind = kind;
        c.strategy = strategy;
        c.criterion = Criterion::cv_mar;
        out.push_back({std::move(name), std::move(c)});
    };
    add("ols-forward", PredictorKind::ols, Strategy::forward);
    add("ols-backward", PredictorKind::ols, Strategy::backward);
    add("ols-bidirectional", PredictorKind::ols, Strategy::bidirectional);
    add("cart-cp-sweep", PredictorKind::cart, Strategy::cp_sweep);
    add("cart-forward", PredictorKind::cart, Strategy::forward);
    add("random-forest-forward", PredictorKind::random_forest, Strategy::forward);
    return out;
}

Rq1Result run_rq1(const Dataset& data, std::span<const PredictorConfig> configs, std::size_t k, std::uint64_t seed,
    std::size_t random_guess_evaluations)
{
    data.validate();
    Rq1Result result;
    result.configs.assign(configs.begin(), configs.end());
    for (auto& c : result.configs) {
        c.selection.folds = k;
        c.selection.seed = seed;
    }
    const std::size_t runs = result.configs.empty() ? 10000 : result.configs.front().selection.baseline_runs;
    result.baseline = random_baseline(data.y, runs, derive_seed(seed, Stream::baseline_run, 0));
    if (result.baseline.degenerate)
        throw ValidationError("degenerate dependent variable: random guessing has zero spread, SA and delta are undefined");

    // Random guessing evaluated as a predictor under the same k-fold protocol.
    if (random_guess_evaluations > 0) {
        std::vector<double> mars(random_guess_evaluations);
        PredictorSpec guess;
        guess.kind = PredictorKind::random_guess;
        parallel_for(random_guess_evaluations, [&](std::size_t r) {
            PredictorSpec spec = guess;
            spec.seed = derive_seed(seed, Stream::experiment, r);
            mars[r] = cross_validate(data, spec, {}, k, spec.seed).mar;
        });
        Scorecard card = make_scorecard("random-guess", "none", stats::mean(mars), result.baseline);
        card.fold_mars = mars;
        result.scorecards.push_back(std::move(card));
    }
    result.scorecards.push_back(make_scorecard("random-guess-q5", "none", result.baseline.q5_mar, result.baseline));

    for (const auto& config : result.configs) {
        result.sweeps.push_back(run_selection(data, config.selection));
        const auto& sweep = result.sweeps.back();
        for (const auto* point : {&sweep.best, &sweep.compact}) {
            Scorecard card = make_scorecard(config.name, fmt::format("{}:{}", to_string(config.selection.strategy),
                point == &sweep.best ? "best" : "compact"), point->mar, result.baseline);
            card.n_variables = point->n_variables;
            card.fold_mars = point->fold_mars;
            card.variables = point->selected_measures;
            result.scorecards.push_back(std::move(card));
        }
    }
    return result;
}

std::string plot_data_tsv(std::span<const SweepResult> sweeps)
{
    std::string out = "predictor\tstrategy\tn_variables\tmar\tsa\n";
    for (const auto& s : sweeps)
        for (const auto& p : s.points)
            out += fmt::format("{}\t{}\t{}\t{}\t{}\n", s.predictor, s.strategy, p.n_variables, csv::format_number(p.mar), csv::format_number(p.sa));
    return out;
}

Rq2Report run_rq2(const Dataset& train_in, const Dataset& holdout, const SelectionConfig& config,
    std::span<const std::size_t> counts, std::size_t resamples)
{
    if (holdout.rows() == 0)
        throw ValidationError("RQ2 needs a non-empty holdout");
    if (counts.empty())
        throw ValidationError("RQ2 needs at least one variable count");
    if (holdout.y_kind != train_in.y_kind)
        throw ValidationError("training and holdout datasets use different dependent-variable kinds");
    const Dataset train = without_expert_columns(train_in);
    train.validate();

    std::vector<std::size_t> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const std::size_t largest = sorted.back();
    if (largest > train.cols())
        throw ValidationError(fmt::format("variable count {} exceeds the {} automated measures", largest, train.cols()));

    SelectionConfig cfg = config;
    cfg.strategy = Strategy::forward;
    cfg.min_variables = largest;
    cfg.max_variables = std::max(cfg.max_variables, largest);
    const SweepResult sweep = forward_select(train, cfg);

    Rq2Report report;
    report.counts = sorted;
    report.holdout_n = holdout.rows();
    report.resamples = resamples;
    report.baseline = sweep.baseline;
    const auto folds = assign_folds(train, cfg.folds, derive_seed(cfg.seed, Stream::selection, 0));

    for (std::size_t ci = 0; ci < sorted.size(); ++ci) {
        const std::size_t count = sorted[ci];
        auto it = std::find_if(sweep.trajectory.begin(), sweep.trajectory.end(), [&](const SweepPoint& p) { return p.n_variables == count; });
        if (it == sweep.trajectory.end())
            throw ValidationError(fmt::format("forward selection did not reach {} variables", count));
        const SweepPoint& point = *it;
        report.measures.push_back(point.selected_measures);
        report.sa_automated_only.push_back(point.sa);

        const auto rows = all_rows(train);
        Predictor predictor = fit(train, rows, point.columns, cfg.predictor);
        bind_columns(predictor, holdout);
        std::vector<double> yhat;
        for (std::size_t r = 0; r < holdout.rows(); ++r)
            yhat.push_back(predict(predictor, holdout.row(r)));
        report.sa_with_expert_truth.push_back(sa(mar(holdout.y, yhat), sweep.baseline.mean_mar));

        // Spread of SA when only holdout-sized samples are scored.
        const auto oof = cross_validate(train, cfg.predictor, point.columns, folds).predictions;
        const std::size_t m = std::min(holdout.rows(), train.rows());
        std::vector<double> sas(resamples);
        parallel_for(resamples, [&](std::size_t s) {
            Rng rng(cfg.seed, Stream::resample, ci * resamples + s);
            std::vector<std::size_t> order = canonical_order(train);
            for (std::size_t i = 0; i < m; ++i)
                std::swap(order[i], order[i + static_cast<std::size_t>(rng.index(order.size() - i))]);
            std::vector<double> y;
            std::vector<double> p;
            for (std::size_t i = 0; i < m; ++i) {
                y.push_back(train.y[order[i]]);
                p.push_back(oof[order[i]]);
            }
            sas[s] = sa(mar(y, p), sweep.baseline.mean_mar);
        });
        report.sa_noise_sd.push_back(resamples > 1 ? stats::sample_sd(sas) : 0.0);
    }
    return report;
}

std::string rq2_json(const Rq2Report& report)
{
    nlohmann::json doc;
    doc["holdout_n"] = report.holdout_n;
    doc["resamples"] = report.resamples;
    doc["baseline"] = {{"mean_mar", report.baseline.mean_mar}, {"sd_mar", report.baseline.sd_mar}, {"exact_mean", report.baseline.exact_mean}};
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < report.counts.size(); ++i) {
        rows.push_back({{"n_variables", report.counts[i]}, {"sa_automated_only", report.sa_automated_only[i]},
            {"sa_with_expert_truth", report.sa_with_expert_truth[i]}, {"sa_noise_sd", report.sa_noise_sd[i]},
            {"measures", report.measures[i]}});
    }
    doc["counts"] = rows;
    return doc.dump(2) + "\n";
}

std::string rq2_csv(const Rq2Report& report)
{
    std::string out = "n_variables,sa_automated_only,sa_with_expert_truth,sa_noise_sd,measures\n";
    for (std::size_t i = 0; i < report.counts.size(); ++i) {
        out += fmt::format("{},{},{},{},{}\n", report.counts[i], csv::format_number(report.sa_automated_only[i]),
            csv::format_number(report.sa_with_expert_truth[i]), csv::format_number(report.sa_noise_sd[i]),
            csv::escape(fmt::format("{}", fmt::join(report.measures[i], ";"))));
    }
    return out;
}

} // namespace qualens
