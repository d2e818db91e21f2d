#include "qualens/cli.hpp"

#include "qualens/csv.hpp"
#include "qualens/dataset.hpp"
#include "qualens/error.hpp"
#include "qualens/evaluation.hpp"
#include "qualens/experiments.hpp"
#include "qualens/model.hpp"
#include "qualens/predictors.hpp"
#include "qualens/rng.hpp"
#include "qualens/selection.hpp"
#include "qualens/synthetic.hpp"
#include "qualens/validation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace qualens {

namespace {

struct Common {
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", c.out, "Output file (default: standard output)");
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

void emit(const Common& c, const std::string& text, std::ostream& out)
{
    if (c.out.empty() || c.out == "-")
        out << text;
    else
        write_text_file(c.out, text);
}

void report_warnings(const std::vector<Diagnostic>& warnings, std::ostream& err)
{
    for (const auto& w : warnings)
        err << to_string(w) << "\n";
}

std::vector<std::size_t> parse_counts(const std::string& text)
{
    std::vector<std::size_t> counts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double v = csv::parse_number(item, "--counts");
        if (v < 1 || v != std::floor(v))
            throw ValidationError(fmt::format("--counts: '{}' is not a positive integer", item));
        counts.push_back(static_cast<std::size_t>(v));
    }
    if (counts.empty())
        throw ValidationError("--counts needs at least one value");
    return counts;
}

struct EvaluateArgs {
    Common common;
    std::string model;
    std::string measures;
    std::string detail_dir;
    bool automated_only = false;
    double neutral = 0.5;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err)
{
    std::vector<Diagnostic> warnings;
    const auto model = load_model(a.model, &warnings);
    const auto systems = read_measurements(a.measures, &model, &warnings);
    EvaluationOptions options;
    options.automated_only = a.automated_only;
    options.neutral_utility = a.neutral;
    std::vector<EvaluationResult> results;
    for (const auto& s : systems) {
        results.push_back(evaluate_system(model, s, options));
        const auto& r = results.back();
        if (!r.neutral_factors.empty())
            warnings.push_back({Severity::warning, s.system_id,
                fmt::format("no measure available for factors {}; neutral utility used", fmt::join(r.neutral_factors, ", "))});
    }
    report_warnings(warnings, err);
    if (!a.detail_dir.empty())
        for (const auto& r : results)
            write_text_file(std::filesystem::path(a.detail_dir) / (r.system_id + ".json"), evaluation_detail_json(r));
    emit(a.common, a.common.format == "json" ? evaluation_report_json(model, results) : evaluation_report_csv(model, results), out);
    return 0;
}

struct CalibrateArgs {
    Common common;
    std::string model;
    std::string measures;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err)
{
    std::vector<Diagnostic> warnings;
    if (!a.model.empty()) {
        auto model = load_model(a.model, &warnings);
        const auto systems = read_measurements(a.measures, &model, &warnings);
        for (auto& f : model.factors) {
            std::vector<double> values;
            for (const auto& s : systems)
                for (const auto& ref : f.evaluation.measures) {
                    auto it = s.values.find(ref.measure_id);
                    if (it != s.values.end())
                        values.push_back(it->second);
                }
            if (values.size() < 4) {
                warnings.push_back({Severity::warning, f.id, "fewer than 4 values; thresholds left unchanged"});
                continue;
            }
            const auto c = calibrate_thresholds(values);
            if (c.degenerate)
                warnings.push_back({Severity::warning, f.id, "all retained values are equal; threshold range widened"});
            f.evaluation.min_threshold = c.min_threshold;
            f.evaluation.max_threshold = c.max_threshold;
        }
        report_warnings(warnings, err);
        emit(a.common, dump_model(model), out);
        return 0;
    }
    const auto table = csv::read_file(a.measures);
    if (table.header.size() < 2 || table.header[0] != "system_id" || table.header[1] != "loc")
        throw ParseError("measurement csv: header must start with 'system_id,loc'");
    nlohmann::json doc = nlohmann::json::array();
    std::string text = "measure_id,min_threshold,max_threshold,used,removed,degenerate\n";
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        std::vector<double> values;
        for (const auto& row : table.rows)
            if (!row[c].empty())
                values.push_back(csv::parse_number(row[c], table.header[c]));
        if (values.size() < 4) {
            warnings.push_back({Severity::warning, table.header[c], "fewer than 4 values; not calibrated"});
            continue;
        }
        const auto cal = calibrate_thresholds(values);
        text += fmt::format("{},{},{},{},{},{}\n", csv::escape(table.header[c]), csv::format_number(cal.min_threshold),
            csv::format_number(cal.max_threshold), cal.used, cal.removed, cal.degenerate ? "true" : "false");
        doc.push_back({{"measure_id", table.header[c]}, {"min_threshold", cal.min_threshold}, {"max_threshold", cal.max_threshold},
            {"used", cal.used}, {"removed", cal.removed}, {"degenerate", cal.degenerate}});
    }
    report_warnings(warnings, err);
    emit(a.common, a.common.format == "json" ? doc.dump(2) + "\n" : text, out);
    return 0;
}

struct DatasetArgs {
    Common common;
    std::string model;
    std::string measures;
    std::string y_kind = "continuous-grade";
    bool automated_only = false;
    bool drop_expert = false;
};

Dataset load_dataset_from_model(const std::string& model_path, const std::string& measures_path, YKind kind,
    bool automated_only, std::vector<Diagnostic>& warnings)
{
    const auto model = load_model(model_path, &warnings);
    const auto systems = read_measurements(measures_path, &model, &warnings);
    EvaluationOptions options;
    options.automated_only = automated_only;
    return build_dataset(model, systems, kind, options, &warnings);
}

int run_dataset(const DatasetArgs& a, std::ostream& out, std::ostream& err)
{
    std::vector<Diagnostic> warnings;
    Dataset data = load_dataset_from_model(a.model, a.measures, parse_y_kind(a.y_kind), a.automated_only, warnings);
    if (a.drop_expert)
        data = without_expert_columns(data);
    report_warnings(warnings, err);
    if (a.common.format == "json") {
        nlohmann::json doc;
        doc["y_kind"] = std::string(to_string(data.y_kind));
        doc["measure_ids"] = data.measure_ids;
        doc["expert_flags"] = data.expert_flags;
        doc["system_ids"] = data.system_ids;
        doc["y"] = data.y;
        auto rows = nlohmann::json::array();
        for (std::size_t r = 0; r < data.rows(); ++r) {
            auto row = data.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        doc["x"] = rows;
        emit(a.common, doc.dump(2) + "\n", out);
    } else {
        emit(a.common, format_dataset_csv(data), out);
    }
    return 0;
}

struct SynthArgs {
    Common common;
    SynthSpec spec;
};

int run_synth(SynthArgs a, std::ostream& out, std::ostream&)
{
    if (a.common.out.empty())
        throw ValidationError("synth needs --out DIR");
    a.spec.seed = a.common.seed;
    const auto corpus = gen_synthetic(a.spec);
    write_synthetic(corpus, a.common.out);
    out << fmt::format("wrote {} training and {} holdout systems to {}\n", corpus.training.size(), corpus.holdout.size(), a.common.out);
    return 0;
}

struct SweepArgs {
    Common common;
    std::string dataset;
    std::string predictor = "random-forest";
    std::string strategy = "forward";
    std::string criterion = "cv-mar";
    std::size_t max_vars = 20;
    std::size_t min_vars = 0;
    double epsilon = 0.0;
    std::size_t folds = 4;
    int trees = 100;
    int m_try = 0;
    int min_leaf = 5;
    int max_depth = 20;
    double cp = 0.01;
    std::size_t baseline_runs = 10000;
    std::size_t guess_evaluations = 1000;
    std::string scorecards;
    std::string plot_data;
    std::string save_predictor;
};

SelectionConfig selection_config(const SweepArgs& a)
{
    SelectionConfig c;
    c.strategy = parse_strategy(a.strategy);
    c.criterion = parse_criterion(a.criterion);
    c.max_variables = a.max_vars;
    c.min_variables = a.min_vars;
    c.improvement_epsilon = a.epsilon;
    c.folds = a.folds;
    c.seed = a.common.seed;
    c.baseline_runs = a.baseline_runs;
    c.predictor.seed = a.common.seed;
    c.predictor.cart = {a.cp, a.min_leaf, a.max_depth};
    c.predictor.forest.n_trees = a.trees;
    c.predictor.forest.m_try = a.m_try;
    c.predictor.forest.cart = {0.0, a.min_leaf, a.max_depth};
    return c;
}

std::string long_sweep_csv(const std::vector<SweepResult>& sweeps, const std::vector<std::string>& names)
{
    std::string out = "predictor,strategy,n_variables,mar,sa,delta,measures\n";
    for (std::size_t i = 0; i < sweeps.size(); ++i)
        for (const auto& p : sweeps[i].points)
            out += fmt::format("{},{},{},{},{},{},{}\n", names[i], sweeps[i].strategy, p.n_variables, csv::format_number(p.mar),
                csv::format_number(p.sa), csv::format_number(p.delta), csv::escape(fmt::format("{}", fmt::join(p.selected_measures, ";"))));
    return out;
}

int run_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err)
{
    const Dataset data = read_dataset(a.dataset);
    data.validate();
    const SelectionConfig base = selection_config(a);
    const bool json = a.common.format == "json";

    if (a.predictor == "all") {
        const auto configs = standard_configs(base);
        const auto result = run_rq1(data, configs, a.folds, a.common.seed, a.guess_evaluations);
        std::vector<std::string> names;
        for (const auto& c : result.configs)
            names.push_back(c.name);
        for (const auto& s : result.sweeps)
            for (const auto& skip : s.skipped)
                err << "skipped " << skip << "\n";
        if (json) {
            nlohmann::json doc = nlohmann::json::array();
            for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
                auto j = nlohmann::json::parse(sweep_json(result.sweeps[i]));
                j["name"] = names[i];
                doc.push_back(j);
            }
            emit(a.common, doc.dump(2) + "\n", out);
        } else {
            emit(a.common, long_sweep_csv(result.sweeps, names), out);
        }
        if (!a.scorecards.empty())
            write_text_file(a.scorecards, json ? scorecards_json(result.scorecards, result.baseline) : scorecards_csv(result.scorecards));
        if (!a.plot_data.empty())
            write_text_file(a.plot_data, plot_data_tsv(result.sweeps));
        return 0;
    }

    SelectionConfig config = base;
    config.predictor.kind = parse_predictor_kind(a.predictor);
    const auto result = run_selection(data, config);
    for (const auto& skip : result.skipped)
        err << "skipped " << skip << "\n";
    emit(a.common, json ? sweep_json(result) : sweep_csv(result), out);
    if (!a.scorecards.empty()) {
        std::vector<Scorecard> cards;
        for (const auto* point : {&result.best, &result.compact}) {
            Scorecard card = make_scorecard(a.predictor, fmt::format("{}:{}", a.strategy, point == &result.best ? "best" : "compact"),
                point->mar, result.baseline);
            card.n_variables = point->n_variables;
            card.fold_mars = point->fold_mars;
            card.variables = point->selected_measures;
            cards.push_back(card);
        }
        write_text_file(a.scorecards, json ? scorecards_json(cards, result.baseline) : scorecards_csv(cards));
    }
    if (!a.plot_data.empty())
        write_text_file(a.plot_data, plot_data_tsv(std::span<const SweepResult>(&result, 1)));
    if (!a.save_predictor.empty()) {
        const Predictor p = fit(data, all_rows(data), result.compact.columns, config.predictor);
        write_text_file(a.save_predictor, predictor_to_json(p));
    }
    return 0;
}

struct Rq2Args {
    Common common;
    std::string model;
    std::string measures;
    std::string holdout;
    std::string counts = "6,8,10,12,14,16";
    std::string predictor = "random-forest";
    std::string y_kind = "discrete-grade";
    std::size_t folds = 4;
    int trees = 100;
    std::size_t resamples = 1000;
    std::size_t baseline_runs = 10000;
};

int run_rq2_command(const Rq2Args& a, std::ostream& out, std::ostream& err)
{
    std::vector<Diagnostic> warnings;
    const auto kind = parse_y_kind(a.y_kind);
    const auto model = load_model(a.model, &warnings);
    const auto train_systems = read_measurements(a.measures, &model, &warnings);
    const auto holdout_systems = read_measurements(a.holdout, &model, &warnings);
    EvaluationOptions automated;
    automated.automated_only = true;
    std::vector<Diagnostic> dataset_warnings;
    const Dataset train = without_expert_columns(build_dataset(model, train_systems, kind, automated, &dataset_warnings));
    const Dataset holdout = build_dataset(model, holdout_systems, kind, {}, &warnings);
    for (const auto& w : dataset_warnings) {
        // Expert columns are expected to be empty in the training corpus.
        const bool expected = std::any_of(model.measures.begin(), model.measures.end(), [&](const Measure& m) {
            return m.kind == MeasureKind::manual_expert && w.message.find("'" + m.id + "'") != std::string::npos;
        });
        if (!expected)
            warnings.push_back(w);
    }
    report_warnings(warnings, err);

    SelectionConfig config;
    config.seed = a.common.seed;
    config.folds = a.folds;
    config.baseline_runs = a.baseline_runs;
    config.predictor.kind = parse_predictor_kind(a.predictor);
    config.predictor.seed = a.common.seed;
    config.predictor.forest.n_trees = a.trees;
    const auto report = run_rq2(train, holdout, config, parse_counts(a.counts), a.resamples);
    emit(a.common, a.common.format == "json" ? rq2_json(report) : rq2_csv(report), out);
    return 0;
}

struct BaselineArgs {
    Common common;
    std::string dataset;
    std::size_t runs = 10000;
};

int run_baseline(const BaselineArgs& a, std::ostream& out, std::ostream&)
{
    const Dataset data = read_dataset(a.dataset);
    data.validate();
    const auto b = random_baseline(data.y, a.runs, derive_seed(a.common.seed, Stream::baseline_run, 0));
    const double q5_sa = b.mean_mar > 0.0 ? sa(b.q5_mar, b.mean_mar) : 0.0;
    if (a.common.format == "json") {
        nlohmann::json doc = {{"runs", b.runs}, {"mean_mar", b.mean_mar}, {"sd_mar", b.sd_mar}, {"q5_mar", b.q5_mar},
            {"exact_mean", b.exact_mean}, {"q5_sa", q5_sa}, {"degenerate", b.degenerate}};
        emit(a.common, doc.dump(2) + "\n", out);
    } else {
        emit(a.common, fmt::format("runs,mean_mar,sd_mar,q5_mar,exact_mean,q5_sa,degenerate\n{},{},{},{},{},{},{}\n", b.runs,
            csv::format_number(b.mean_mar), csv::format_number(b.sd_mar), csv::format_number(b.q5_mar),
            csv::format_number(b.exact_mean), csv::format_number(q5_sa), b.degenerate ? "true" : "false"), out);
    }
    return 0;
}

struct PredictArgs {
    Common common;
    std::string predictor;
    std::string dataset;
    std::string model;
    std::string measures;
    std::string y_kind = "discrete-grade";
    bool automated_only = false;
};

int run_predict(const PredictArgs& a, std::ostream& out, std::ostream& err)
{
    Predictor predictor = predictor_from_json(read_text_file(a.predictor));
    Dataset data;
    if (!a.dataset.empty()) {
        data = read_dataset(a.dataset);
    } else if (!a.model.empty() && !a.measures.empty()) {
        std::vector<Diagnostic> warnings;
        data = load_dataset_from_model(a.model, a.measures, parse_y_kind(a.y_kind), a.automated_only, warnings);
        report_warnings(warnings, err);
    } else {
        throw ValidationError("predict needs --dataset or both --model and --measures");
    }
    bind_columns(predictor, data);
    if (predictor.kind == PredictorKind::random_guess)
        predictor.seed = a.common.seed;
    std::vector<double> yhat;
    for (std::size_t r = 0; r < data.rows(); ++r)
        yhat.push_back(predict(predictor, data.row(r)));
    if (a.common.format == "json") {
        nlohmann::json doc;
        doc["mar"] = mar(data.y, yhat);
        auto rows = nlohmann::json::array();
        for (std::size_t r = 0; r < data.rows(); ++r)
            rows.push_back({{"system_id", data.system_ids[r]}, {"y", data.y[r]}, {"prediction", yhat[r]}});
        doc["predictions"] = rows;
        emit(a.common, doc.dump(2) + "\n", out);
    } else {
        std::string text = "system_id,y,prediction\n";
        for (std::size_t r = 0; r < data.rows(); ++r)
            text += fmt::format("{},{},{}\n", csv::escape(data.system_ids[r]), csv::format_number(data.y[r]), csv::format_number(yhat[r]));
        emit(a.common, text, out);
        err << "MAR " << csv::format_number(mar(data.y, yhat)) << "\n";
    }
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"qualens: quality-model evaluation and focused predictor experiments", "qualens"};
    app.require_subcommand(1);

    EvaluateArgs evaluate;
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Evaluate systems against a quality model");
    add_common(cmd_evaluate, evaluate.common);
    cmd_evaluate->add_option("--model", evaluate.model, "Quality model JSON")->required();
    cmd_evaluate->add_option("--measures", evaluate.measures, "Measurement CSV")->required();
    cmd_evaluate->add_flag("--automated-only", evaluate.automated_only, "Ignore manual-expert measures");
    cmd_evaluate->add_option("--detail-dir", evaluate.detail_dir, "Write one per-system JSON report into this directory");
    cmd_evaluate->add_option("--neutral", evaluate.neutral, "Utility of factors without any measure value")->capture_default_str();

    CalibrateArgs calibrate;
    auto* cmd_calibrate = app.add_subcommand("calibrate", "Calibrate thresholds from a measurement corpus");
    add_common(cmd_calibrate, calibrate.common);
    cmd_calibrate->add_option("--measures", calibrate.measures, "Measurement CSV")->required();
    cmd_calibrate->add_option("--model", calibrate.model, "Model whose factor thresholds are recalibrated");

    DatasetArgs dataset;
    auto* cmd_dataset = app.add_subcommand("dataset", "Build a predictor dataset from model evaluations");
    add_common(cmd_dataset, dataset.common);
    cmd_dataset->add_option("--model", dataset.model, "Quality model JSON")->required();
    cmd_dataset->add_option("--measures", dataset.measures, "Measurement CSV")->required();
    cmd_dataset->add_option("--y-kind", dataset.y_kind, "continuous-grade or discrete-grade")->capture_default_str();
    cmd_dataset->add_flag("--automated-only", dataset.automated_only, "Dependent variable ignores manual-expert measures");
    cmd_dataset->add_flag("--drop-expert", dataset.drop_expert, "Omit expert measure columns");

    SynthArgs synth;
    synth.common.seed = 7;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic corpus (model.json, measures.csv, holdout.csv, truth.json)");
    add_common(cmd_synth, synth.common);
    cmd_synth->add_option("--systems", synth.spec.n_systems)->capture_default_str();
    cmd_synth->add_option("--measures", synth.spec.n_measures)->capture_default_str();
    cmd_synth->add_option("--informative", synth.spec.n_informative)->capture_default_str();
    cmd_synth->add_option("--expert", synth.spec.n_expert)->capture_default_str();
    cmd_synth->add_option("--expert-weight", synth.spec.expert_weight)->capture_default_str();
    cmd_synth->add_option("--noise-sd", synth.spec.noise_sd)->capture_default_str();
    cmd_synth->add_option("--spread", synth.spec.spread)->capture_default_str();
    cmd_synth->add_option("--correlation", synth.spec.correlation, "Latent shared variance share in [0,1)")->capture_default_str();
    cmd_synth->add_option("--holdout", synth.spec.n_holdout)->capture_default_str();
    cmd_synth->add_flag("--keep-expert{false}", synth.spec.withhold_expert, "Write expert values into the training measures too");

    SweepArgs sweep;
    auto* cmd_sweep = app.add_subcommand("sweep", "Variable-selection sweep (use --predictor all for every configuration)");
    add_common(cmd_sweep, sweep.common);
    cmd_sweep->add_option("--dataset", sweep.dataset, "Dataset CSV")->required();
    cmd_sweep->add_option("--predictor", sweep.predictor, "ols, cart, random-forest, random-guess or all")->capture_default_str();
    cmd_sweep->add_option("--strategy", sweep.strategy, "forward, backward, bidirectional or cp-sweep")->capture_default_str();
    cmd_sweep->add_option("--criterion", sweep.criterion, "cv-mar or ols-partial-F")->capture_default_str();
    cmd_sweep->add_option("--max-vars", sweep.max_vars)->capture_default_str();
    cmd_sweep->add_option("--min-vars", sweep.min_vars)->capture_default_str();
    cmd_sweep->add_option("--epsilon", sweep.epsilon, "Minimum criterion improvement to continue")->capture_default_str();
    cmd_sweep->add_option("--folds", sweep.folds)->capture_default_str();
    cmd_sweep->add_option("--trees", sweep.trees)->capture_default_str();
    cmd_sweep->add_option("--m-try", sweep.m_try, "0 = ceil(sqrt(columns))")->capture_default_str();
    cmd_sweep->add_option("--min-leaf", sweep.min_leaf)->capture_default_str();
    cmd_sweep->add_option("--max-depth", sweep.max_depth)->capture_default_str();
    cmd_sweep->add_option("--cp", sweep.cp, "CART complexity parameter")->capture_default_str();
    cmd_sweep->add_option("--baseline-runs", sweep.baseline_runs)->capture_default_str();
    cmd_sweep->add_option("--guess-evaluations", sweep.guess_evaluations, "Random-guess evaluations for --predictor all")->capture_default_str();
    cmd_sweep->add_option("--scorecards", sweep.scorecards, "Write scorecards to this file");
    cmd_sweep->add_option("--plot-data", sweep.plot_data, "Write plot data (TSV) to this file");
    cmd_sweep->add_option("--save-predictor", sweep.save_predictor, "Fit the compact model and save it as JSON");

    Rq2Args rq2;
    auto* cmd_rq2 = app.add_subcommand("rq2", "Train without expert measures, score against expert-inclusive truth");
    add_common(cmd_rq2, rq2.common);
    cmd_rq2->add_option("--model", rq2.model, "Quality model JSON")->required();
    cmd_rq2->add_option("--measures", rq2.measures, "Training measurement CSV")->required();
    cmd_rq2->add_option("--holdout", rq2.holdout, "Holdout measurement CSV")->required();
    cmd_rq2->add_option("--counts", rq2.counts, "Comma-separated variable counts")->capture_default_str();
    cmd_rq2->add_option("--predictor", rq2.predictor)->capture_default_str();
    cmd_rq2->add_option("--y-kind", rq2.y_kind)->capture_default_str();
    cmd_rq2->add_option("--folds", rq2.folds)->capture_default_str();
    cmd_rq2->add_option("--trees", rq2.trees)->capture_default_str();
    cmd_rq2->add_option("--resamples", rq2.resamples)->capture_default_str();
    cmd_rq2->add_option("--baseline-runs", rq2.baseline_runs)->capture_default_str();

    BaselineArgs baseline;
    auto* cmd_baseline = app.add_subcommand("baseline", "Random-guessing baseline of a dataset");
    add_common(cmd_baseline, baseline.common);
    cmd_baseline->add_option("--dataset", baseline.dataset, "Dataset CSV")->required();
    cmd_baseline->add_option("--runs", baseline.runs)->capture_default_str();

    PredictArgs predict_args;
    auto* cmd_predict = app.add_subcommand("predict", "Apply a saved predictor");
    add_common(cmd_predict, predict_args.common);
    cmd_predict->add_option("--predictor", predict_args.predictor, "Predictor JSON")->required();
    cmd_predict->add_option("--dataset", predict_args.dataset, "Dataset CSV");
    cmd_predict->add_option("--model", predict_args.model, "Quality model JSON");
    cmd_predict->add_option("--measures", predict_args.measures, "Measurement CSV");
    cmd_predict->add_option("--y-kind", predict_args.y_kind)->capture_default_str();
    cmd_predict->add_flag("--automated-only", predict_args.automated_only);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 64;
    }

    try {
        if (cmd_evaluate->parsed())
            return run_evaluate(evaluate, out, err);
        if (cmd_calibrate->parsed())
            return run_calibrate(calibrate, out, err);
        if (cmd_dataset->parsed())
            return run_dataset(dataset, out, err);
        if (cmd_synth->parsed())
            return run_synth(synth, out, err);
        if (cmd_sweep->parsed())
            return run_sweep(sweep, out, err);
        if (cmd_rq2->parsed())
            return run_rq2_command(rq2, out, err);
        if (cmd_baseline->parsed())
            return run_baseline(baseline, out, err);
        if (cmd_predict->parsed())
            return run_predict(predict_args, out, err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 70;
    }
    return 64;
}

int cli_main(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return cli_main(args, std::cout, std::cerr);
}

} // namespace qualens
