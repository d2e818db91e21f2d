#include "qualens/dataset.hpp"
#include "qualens/error.hpp"
#include "qualens/evaluation.hpp"
#include "qualens/experiments.hpp"
#include "qualens/model.hpp"
#include "qualens/selection.hpp"
#include "qualens/synthetic.hpp"
#include "qualens/validation.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace qualens;

namespace {

py::dict result_dict(const EvaluationResult& r)
{
    py::dict d;
    d["system_id"] = r.system_id;
    d["root_utility"] = r.root_utility;
    d["grade_discrete"] = r.grade.discrete;
    d["grade_continuous"] = r.grade.continuous;
    d["aspect_utilities"] = r.aspect_utilities;
    d["factor_utilities"] = r.factor_utilities;
    d["missing_measures"] = r.missing_measures;
    return d;
}

py::dict point_dict(const SweepPoint& p)
{
    py::dict d;
    d["n_variables"] = p.n_variables;
    d["selected_measures"] = p.selected_measures;
    d["mar"] = p.mar;
    d["sa"] = p.sa;
    d["delta"] = p.delta;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Hierarchical quality model evaluation and grade prediction";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());

    py::enum_<Direction>(m, "Direction")
        .value("higher_is_more_present", Direction::higher_is_more_present)
        .value("higher_is_less_present", Direction::higher_is_less_present);

    py::class_<QualityModel>(m, "QualityModel")
        .def_readonly("name", &QualityModel::name)
        .def_readonly("root_aspect_id", &QualityModel::root_aspect_id)
        .def("to_json", [](const QualityModel& model) { return dump_model(model); })
        .def_property_readonly("measure_ids", [](const QualityModel& model) {
            std::vector<std::string> ids;
            for (const auto& ms : model.measures)
                ids.push_back(ms.id);
            return ids;
        });

    m.def("load_model", [](const std::filesystem::path& path) { return load_model(path); }, py::arg("path"));
    m.def("parse_model", [](const std::string& text) { return parse_model(text); }, py::arg("text"));

    m.def("normalize_measure", py::overload_cast<double, double, double, Direction>(&normalize_measure),
        py::arg("value"), py::arg("min_threshold"), py::arg("max_threshold"), py::arg("direction"));

    m.def("to_grade", [](const QualityModel& model, double utility) {
        const auto g = to_grade(utility, model.grade_bands);
        return std::pair{g.discrete, g.continuous};
    }, py::arg("model"), py::arg("utility"));

    m.def("evaluate", [](const QualityModel& model, const std::string& system_id, const std::map<std::string, double>& values,
                          std::int64_t loc, bool automated_only) {
        SystemMeasurements s{system_id, loc, values};
        EvaluationOptions options;
        options.automated_only = automated_only;
        return result_dict(evaluate_system(model, s, options));
    }, py::arg("model"), py::arg("system_id"), py::arg("values"), py::arg("loc") = 1000, py::arg("automated_only") = false);

    m.def("evaluate_csv", [](const QualityModel& model, const std::filesystem::path& path) {
        py::list out;
        for (const auto& s : read_measurements(path, &model))
            out.append(result_dict(evaluate_system(model, s)));
        return out;
    }, py::arg("model"), py::arg("path"));

    m.def("calibrate", [](const std::vector<double>& values) {
        const auto c = calibrate_thresholds(values);
        return std::pair{c.min_threshold, c.max_threshold};
    }, py::arg("values"));

    m.def("mar", [](const std::vector<double>& y, const std::vector<double>& yhat) { return mar(y, yhat); },
        py::arg("y"), py::arg("yhat"));
    m.def("sa", &sa, py::arg("mar_p"), py::arg("baseline_mean_mar"));
    m.def("exact_baseline_mar", [](const std::vector<double>& y) { return exact_baseline_mar(y); }, py::arg("y"));
    m.def("random_baseline", [](const std::vector<double>& y, std::size_t runs, std::uint64_t seed) {
        const auto b = random_baseline(y, runs, seed);
        py::dict d;
        d["mean_mar"] = b.mean_mar;
        d["sd_mar"] = b.sd_mar;
        d["q5_mar"] = b.q5_mar;
        d["exact_mean"] = b.exact_mean;
        return d;
    }, py::arg("y"), py::arg("runs") = 1000, py::arg("seed") = 42);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("system_ids", &Dataset::system_ids)
        .def_readonly("measure_ids", &Dataset::measure_ids)
        .def_readonly("y", &Dataset::y)
        .def_property_readonly("rows", &Dataset::rows)
        .def_property_readonly("cols", &Dataset::cols)
        .def("column", &Dataset::column, py::arg("index"))
        .def("to_csv", [](const Dataset& d) { return format_dataset_csv(d); });

    m.def("read_dataset", [](const std::filesystem::path& path) { return read_dataset(path); }, py::arg("path"));
    m.def("build_dataset", [](const QualityModel& model, const std::filesystem::path& measurements, bool discrete) {
        const auto systems = read_measurements(measurements, &model);
        return build_dataset(model, systems, discrete ? YKind::discrete_grade : YKind::continuous_grade);
    }, py::arg("model"), py::arg("measurements"), py::arg("discrete") = false);

    m.def("sweep", [](const Dataset& data, const std::string& predictor, const std::string& strategy,
                       std::size_t max_variables, std::uint64_t seed, std::size_t baseline_runs) {
        SelectionConfig config;
        config.predictor.kind = parse_predictor_kind(predictor);
        config.strategy = parse_strategy(strategy);
        config.max_variables = max_variables;
        config.seed = seed;
        config.predictor.seed = seed;
        config.baseline_runs = baseline_runs;
        const auto r = [&] {
            py::gil_scoped_release release;
            return run_selection(data, config);
        }();
        py::dict d;
        d["predictor"] = r.predictor;
        d["strategy"] = r.strategy;
        d["best"] = point_dict(r.best);
        d["compact"] = point_dict(r.compact);
        py::list points;
        for (const auto& p : r.points)
            points.append(point_dict(p));
        d["points"] = points;
        d["baseline_mean_mar"] = r.baseline.mean_mar;
        return d;
    }, py::arg("data"), py::arg("predictor") = "ols", py::arg("strategy") = "forward", py::arg("max_variables") = 20,
        py::arg("seed") = 42, py::arg("baseline_runs") = 1000);

    m.def("synth", [](const std::filesystem::path& out_dir, std::size_t n_systems, std::size_t n_measures,
                       std::size_t n_informative, std::uint64_t seed) {
        SynthSpec spec;
        spec.n_systems = n_systems;
        spec.n_measures = n_measures;
        spec.n_informative = n_informative;
        spec.seed = seed;
        const auto corpus = gen_synthetic(spec);
        write_synthetic(corpus, out_dir);
        return corpus.informative;
    }, py::arg("out_dir"), py::arg("n_systems") = 500, py::arg("n_measures") = 60, py::arg("n_informative") = 10,
        py::arg("seed") = 7);
}
