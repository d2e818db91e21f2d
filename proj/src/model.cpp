#include "qualens/model.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <set>

namespace qualens {

using nlohmann::json;

std::vector<GradeBand> default_grade_bands()
{
    return {{0.0, 6}, {0.90, 5}, {0.92, 4}, {0.94, 3}, {0.96, 2}, {0.98, 1}};
}

const Measure* QualityModel::find_measure(std::string_view id) const
{
    auto it = std::find_if(measures.begin(), measures.end(), [&](const Measure& m) { return m.id == id; });
    return it == measures.end() ? nullptr : &*it;
}

const ProductFactor* QualityModel::find_factor(std::string_view id) const
{
    auto it = std::find_if(factors.begin(), factors.end(), [&](const ProductFactor& f) { return f.id == id; });
    return it == factors.end() ? nullptr : &*it;
}

const QualityAspect* QualityModel::find_aspect(std::string_view id) const
{
    auto it = std::find_if(aspects.begin(), aspects.end(), [&](const QualityAspect& a) { return a.id == id; });
    return it == aspects.end() ? nullptr : &*it;
}

std::vector<std::string> QualityModel::children_of(std::string_view aspect_id) const
{
    std::vector<std::string> out;
    for (const auto& a : aspects)
        if (a.parent_id && *a.parent_id == aspect_id)
            out.push_back(a.id);
    return out;
}

std::string to_string(const Diagnostic& d)
{
    return fmt::format("{}: {}: {}", d.severity == Severity::error ? "error" : "warning", d.location, d.message);
}

bool has_errors(const std::vector<Diagnostic>& diagnostics)
{
    return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.severity == Severity::error; });
}

std::string_view to_string(MeasureKind kind)
{
    return kind == MeasureKind::automatic ? "automatic" : "manual-expert";
}

std::string_view to_string(MeasureUnit unit)
{
    switch (unit) {
    case MeasureUnit::proportion:
        return "proportion";
    case MeasureUnit::findings_per_kloc:
        return "findings-per-kloc";
    case MeasureUnit::count:
        return "count";
    case MeasureUnit::raw:
        return "raw";
    }
    return "raw";
}

std::string_view to_string(Direction direction)
{
    return direction == Direction::higher_is_more_present ? "higher-is-more-present" : "higher-is-less-present";
}

std::string_view to_string(Polarity polarity)
{
    return polarity == Polarity::positive ? "positive" : "negative";
}

// ---------------------------------------------------------------------------
// validation

namespace {

struct DiagnosticSink {
    std::vector<Diagnostic> out;

    void error(std::string location, std::string message)
    {
        out.push_back({Severity::error, std::move(location), std::move(message)});
    }
    void warning(std::string location, std::string message)
    {
        out.push_back({Severity::warning, std::move(location), std::move(message)});
    }
};

void validate_bands(const std::vector<GradeBand>& bands, DiagnosticSink& sink)
{
    if (bands.empty()) {
        sink.error("grade_bands", "no grade bands defined");
        return;
    }
    if (bands.front().lower != 0.0)
        sink.error("grade_bands", fmt::format("grade bands leave a gap at 0 (first band starts at {})", csv::format_number(bands.front().lower)));
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const auto& b = bands[i];
        if (b.grade < 1 || b.grade > 6)
            sink.error(fmt::format("grade_bands[{}]", i), fmt::format("grade {} outside 1..6", b.grade));
        if (b.lower < 0.0 || b.lower >= 1.0)
            sink.error(fmt::format("grade_bands[{}]", i), fmt::format("lower bound {} outside [0,1)", csv::format_number(b.lower)));
        if (i > 0) {
            const auto& prev = bands[i - 1];
            if (b.lower <= prev.lower)
                sink.error(fmt::format("grade_bands[{}]", i), fmt::format("grade bands overlap at {}", csv::format_number(b.lower)));
            if (b.grade >= prev.grade)
                sink.error(fmt::format("grade_bands[{}]", i), fmt::format("grades must strictly decrease as utility increases ({} follows {})", b.grade, prev.grade));
        }
    }
}

} // namespace

std::vector<Diagnostic> validate_model(const QualityModel& model)
{
    DiagnosticSink sink;

    std::set<std::string> measure_ids;
    for (std::size_t i = 0; i < model.measures.size(); ++i) {
        const auto& m = model.measures[i];
        const auto loc = fmt::format("measures[{}]", i);
        if (m.id.empty())
            sink.error(loc, "empty measure id");
        else if (!measure_ids.insert(m.id).second)
            sink.error(loc, fmt::format("duplicate measure id '{}'", m.id));
    }

    std::set<std::string> aspect_ids;
    for (std::size_t i = 0; i < model.aspects.size(); ++i) {
        const auto& a = model.aspects[i];
        const auto loc = fmt::format("aspects[{}]", i);
        if (a.id.empty())
            sink.error(loc, "empty aspect id");
        else if (!aspect_ids.insert(a.id).second)
            sink.error(loc, fmt::format("duplicate aspect id '{}'", a.id));
    }

    std::set<std::string> factor_ids;
    std::vector<std::string> unknown_ids;
    for (const auto& f : model.factors) {
        const auto loc = fmt::format("factor '{}'", f.id);
        if (f.id.empty())
            sink.error("factors", "empty factor id");
        else if (!factor_ids.insert(f.id).second)
            sink.error(loc, fmt::format("duplicate factor id '{}'", f.id));

        const auto& ev = f.evaluation;
        if (!(ev.min_threshold < ev.max_threshold))
            sink.error(loc, fmt::format("min threshold {} must be below max threshold {}", csv::format_number(ev.min_threshold), csv::format_number(ev.max_threshold)));
        if (ev.measures.empty())
            sink.error(loc, "evaluation references no measures");
        bool any_positive = false;
        for (const auto& ref : ev.measures) {
            if (!(ref.weight >= 0.0))
                sink.error(loc, fmt::format("negative weight {} for measure '{}'", csv::format_number(ref.weight), ref.measure_id));
            if (ref.weight > 0.0)
                any_positive = true;
            if (!measure_ids.count(ref.measure_id)) {
                sink.error(loc, fmt::format("unknown measure '{}'", ref.measure_id));
                unknown_ids.push_back(ref.measure_id);
            }
        }
        if (!ev.measures.empty() && !any_positive)
            sink.error(loc, "no positive weight among evaluation measures");

        if (f.impacts.empty())
            sink.warning(loc, "dangling factor: no impacts on any aspect");
        for (const auto& imp : f.impacts) {
            if (!aspect_ids.count(imp.target_aspect_id)) {
                sink.error(loc, fmt::format("impact targets unknown aspect '{}'", imp.target_aspect_id));
                unknown_ids.push_back(imp.target_aspect_id);
            }
        }
    }

    // aspect tree
    if (model.root_aspect_id.empty() || !aspect_ids.count(model.root_aspect_id)) {
        sink.error("root_aspect", fmt::format("unknown root aspect '{}'", model.root_aspect_id));
        unknown_ids.push_back(model.root_aspect_id);
    }
    for (const auto& a : model.aspects) {
        const auto loc = fmt::format("aspect '{}'", a.id);
        if (a.id == model.root_aspect_id) {
            if (a.parent_id)
                sink.error(loc, "root aspect must not have a parent");
        } else if (!a.parent_id) {
            sink.error(loc, "second root: aspect has no parent and is not the root aspect");
        } else if (!aspect_ids.count(*a.parent_id)) {
            sink.error(loc, fmt::format("parent refers to unknown aspect '{}'", *a.parent_id));
            unknown_ids.push_back(*a.parent_id);
        } else {
            // walk up; a tree reaches the root within |aspects| steps
            const QualityAspect* cur = &a;
            std::size_t steps = 0;
            while (cur && cur->parent_id && steps <= model.aspects.size()) {
                cur = model.find_aspect(*cur->parent_id);
                ++steps;
            }
            if (steps > model.aspects.size())
                sink.error(loc, "cycle in aspect hierarchy");
        }

        const auto children = model.children_of(a.id);
        for (const auto& [child, w] : a.child_weights) {
            if (std::find(children.begin(), children.end(), child) == children.end())
                sink.error(loc, fmt::format("child weight for '{}' which is not a child aspect", child));
            if (!(w >= 0.0))
                sink.error(loc, fmt::format("negative child weight for '{}'", child));
        }

        std::vector<std::string> impacting;
        for (const auto& f : model.factors)
            for (const auto& imp : f.impacts)
                if (imp.target_aspect_id == a.id)
                    impacting.push_back(f.id);
        for (const auto& [factor, w] : a.factor_weights) {
            if (std::find(impacting.begin(), impacting.end(), factor) == impacting.end())
                sink.error(loc, fmt::format("factor weight for '{}' which has no impact on this aspect", factor));
            if (!(w >= 0.0))
                sink.error(loc, fmt::format("negative factor weight for '{}'", factor));
        }

        if (children.empty() && impacting.empty()) {
            sink.warning(loc, "aspect has no child aspects and no impacting factors");
            continue;
        }
        bool positive = false;
        for (const auto& c : children) {
            auto it = a.child_weights.find(c);
            if (it == a.child_weights.end() || it->second > 0.0)
                positive = true;
        }
        for (const auto& f : impacting) {
            auto it = a.factor_weights.find(f);
            if (it == a.factor_weights.end() || it->second > 0.0)
                positive = true;
        }
        if (!positive)
            sink.error(loc, "no positive weight among child aspects and factors");
    }

    validate_bands(model.grade_bands, sink);

    if (!unknown_ids.empty()) {
        std::sort(unknown_ids.begin(), unknown_ids.end());
        unknown_ids.erase(std::unique(unknown_ids.begin(), unknown_ids.end()), unknown_ids.end());
        std::string list;
        for (const auto& id : unknown_ids)
            list += (list.empty() ? "'" : ", '") + id + "'";
        sink.error("model", "dangling references to unknown ids: " + list);
    }
    return std::move(sink.out);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename Enum>
Enum parse_enum(const json& j, std::string_view location, std::initializer_list<std::pair<std::string_view, Enum>> options)
{
    if (!j.is_string())
        throw ParseError(fmt::format("{}: expected a string", location));
    const auto s = j.get<std::string>();
    for (const auto& [name, value] : options)
        if (s == name)
            return value;
    std::string allowed;
    for (const auto& [name, value] : options)
        allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ParseError(fmt::format("{}: '{}' is not one of {}", location, s, allowed));
}

const json& require(const json& obj, const char* key, std::string_view location)
{
    auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError(fmt::format("{}: missing field '{}'", location, key));
    return *it;
}

std::string get_string(const json& obj, const char* key, std::string_view location, bool required = true)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required)
            throw ParseError(fmt::format("{}: missing field '{}'", location, key));
        return {};
    }
    if (!it->is_string())
        throw ParseError(fmt::format("{}.{}: expected a string", location, key));
    return it->get<std::string>();
}

double get_number(const json& j, std::string_view location)
{
    if (!j.is_number())
        throw ParseError(fmt::format("{}: expected a number", location));
    return j.get<double>();
}

std::map<std::string, double> get_weights(const json& obj, const char* key, std::string_view location)
{
    std::map<std::string, double> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return out;
    if (!it->is_object())
        throw ParseError(fmt::format("{}.{}: expected an object", location, key));
    for (const auto& [k, v] : it->items())
        out[k] = v.is_null() ? 1.0 : get_number(v, fmt::format("{}.{}.{}", location, key, k));
    return out;
}

const json& get_array(const json& obj, const char* key, std::string_view location)
{
    const auto& j = require(obj, key, location);
    if (!j.is_array())
        throw ParseError(fmt::format("{}.{}: expected an array", location, key));
    return j;
}

void check_fields(const json& obj, std::string_view location, std::initializer_list<std::string_view> known, std::vector<Diagnostic>* warnings)
{
    if (!obj.is_object())
        throw ParseError(fmt::format("{}: expected an object", location));
    if (!warnings)
        return;
    for (const auto& [k, v] : obj.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end())
            warnings->push_back({Severity::warning, std::string(location), fmt::format("unknown field '{}' ignored", k)});
    }
}

QualityModel model_from_json(const json& doc, std::vector<Diagnostic>* warnings)
{
    check_fields(doc, "model", {"format_version", "name", "root_aspect", "grade_bands", "aspects", "factors", "measures"}, warnings);

    const auto& version = require(doc, "format_version", "model");
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw ParseError("model: unsupported format_version (expected 1)");

    QualityModel model;
    model.name = get_string(doc, "name", "model", false);
    model.root_aspect_id = get_string(doc, "root_aspect", "model");

    if (auto it = doc.find("grade_bands"); it != doc.end() && !it->is_null()) {
        if (!it->is_array())
            throw ParseError("model.grade_bands: expected an array");
        model.grade_bands.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& b = (*it)[i];
            const auto loc = fmt::format("grade_bands[{}]", i);
            if (!b.is_array() || b.size() != 2 || !b[1].is_number_integer())
                throw ParseError(fmt::format("{}: expected [lower, grade]", loc));
            model.grade_bands.push_back({get_number(b[0], loc), b[1].get<int>()});
        }
    }

    const auto& measures = get_array(doc, "measures", "model");
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const auto& m = measures[i];
        const auto loc = fmt::format("measures[{}]", i);
        check_fields(m, loc, {"id", "name", "kind", "unit", "description"}, warnings);
        Measure out;
        out.id = get_string(m, "id", loc);
        out.name = get_string(m, "name", loc, false);
        out.description = get_string(m, "description", loc, false);
        if (auto it = m.find("kind"); it != m.end())
            out.kind = parse_enum<MeasureKind>(*it, loc + ".kind", {{"automatic", MeasureKind::automatic}, {"manual-expert", MeasureKind::manual_expert}});
        if (auto it = m.find("unit"); it != m.end())
            out.unit = parse_enum<MeasureUnit>(*it, loc + ".unit",
                {{"proportion", MeasureUnit::proportion}, {"findings-per-kloc", MeasureUnit::findings_per_kloc}, {"count", MeasureUnit::count}, {"raw", MeasureUnit::raw}});
        model.measures.push_back(std::move(out));
    }

    const auto& aspects = get_array(doc, "aspects", "model");
    for (std::size_t i = 0; i < aspects.size(); ++i) {
        const auto& a = aspects[i];
        const auto loc = fmt::format("aspects[{}]", i);
        check_fields(a, loc, {"id", "name", "parent", "child_weights", "factor_weights"}, warnings);
        QualityAspect out;
        out.id = get_string(a, "id", loc);
        out.name = get_string(a, "name", loc, false);
        if (auto parent = get_string(a, "parent", loc, false); !parent.empty())
            out.parent_id = parent;
        out.child_weights = get_weights(a, "child_weights", loc);
        out.factor_weights = get_weights(a, "factor_weights", loc);
        model.aspects.push_back(std::move(out));
    }

    const auto& factors = get_array(doc, "factors", "model");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        const auto loc = fmt::format("factors[{}]", i);
        check_fields(f, loc, {"id", "entity", "name", "impacts", "evaluation"}, warnings);
        ProductFactor out;
        out.id = get_string(f, "id", loc);
        out.entity = get_string(f, "entity", loc, false);
        out.name = get_string(f, "name", loc, false);

        if (auto it = f.find("impacts"); it != f.end() && !it->is_null()) {
            if (!it->is_array())
                throw ParseError(loc + ".impacts: expected an array");
            for (std::size_t k = 0; k < it->size(); ++k) {
                const auto& imp = (*it)[k];
                const auto iloc = fmt::format("{}.impacts[{}]", loc, k);
                check_fields(imp, iloc, {"aspect", "polarity", "justification"}, warnings);
                Impact impact;
                impact.target_aspect_id = get_string(imp, "aspect", iloc);
                if (auto p = imp.find("polarity"); p != imp.end())
                    impact.polarity = parse_enum<Polarity>(*p, iloc + ".polarity", {{"positive", Polarity::positive}, {"negative", Polarity::negative}});
                impact.justification = get_string(imp, "justification", iloc, false);
                out.impacts.push_back(std::move(impact));
            }
        }

        const auto& ev = require(f, "evaluation", loc);
        const auto eloc = loc + ".evaluation";
        check_fields(ev, eloc, {"direction", "min", "max", "measures"}, warnings);
        out.evaluation.min_threshold = get_number(require(ev, "min", eloc), eloc + ".min");
        out.evaluation.max_threshold = get_number(require(ev, "max", eloc), eloc + ".max");
        if (auto d = ev.find("direction"); d != ev.end())
            out.evaluation.direction = parse_enum<Direction>(*d, eloc + ".direction",
                {{"higher-is-more-present", Direction::higher_is_more_present}, {"higher-is-less-present", Direction::higher_is_less_present}});
        const auto& refs = require(ev, "measures", eloc);
        if (!refs.is_object())
            throw ParseError(eloc + ".measures: expected an object of measure-id to weight");
        for (const auto& [id, w] : refs.items())
            out.evaluation.measures.push_back({id, w.is_null() ? 1.0 : get_number(w, eloc + ".measures." + id)});

        model.factors.push_back(std::move(out));
    }
    return model;
}

json weights_to_json(const std::map<std::string, double>& weights)
{
    json out = json::object();
    for (const auto& [k, v] : weights)
        out[k] = v;
    return out;
}

} // namespace

QualityModel parse_model(std::string_view json_text, std::vector<Diagnostic>* warnings)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("model: malformed JSON: {}", e.what()));
    }

    std::vector<Diagnostic> parse_warnings;
    QualityModel model;
    try {
        model = model_from_json(doc, &parse_warnings);
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("model: {}", e.what()));
    }

    auto diagnostics = validate_model(model);
    if (has_errors(diagnostics)) {
        std::string message = "invalid quality model";
        for (const auto& d : diagnostics)
            if (d.severity == Severity::error)
                message += "\n  " + to_string(d);
        throw ValidationError(message);
    }
    if (warnings) {
        warnings->insert(warnings->end(), parse_warnings.begin(), parse_warnings.end());
        warnings->insert(warnings->end(), diagnostics.begin(), diagnostics.end());
    }
    return model;
}

QualityModel load_model(const std::filesystem::path& path, std::vector<Diagnostic>* warnings)
{
    return parse_model(read_text_file(path), warnings);
}

std::string dump_model(const QualityModel& model)
{
    json doc;
    doc["format_version"] = 1;
    if (!model.name.empty())
        doc["name"] = model.name;
    doc["root_aspect"] = model.root_aspect_id;

    json bands = json::array();
    for (const auto& b : model.grade_bands)
        bands.push_back(json::array({b.lower, b.grade}));
    doc["grade_bands"] = bands;

    json aspects = json::array();
    for (const auto& a : model.aspects) {
        json j;
        j["id"] = a.id;
        j["name"] = a.name;
        j["parent"] = a.parent_id ? json(*a.parent_id) : json(nullptr);
        j["child_weights"] = weights_to_json(a.child_weights);
        j["factor_weights"] = weights_to_json(a.factor_weights);
        aspects.push_back(std::move(j));
    }
    doc["aspects"] = aspects;

    json factors = json::array();
    for (const auto& f : model.factors) {
        json j;
        j["id"] = f.id;
        j["entity"] = f.entity;
        j["name"] = f.name;
        json impacts = json::array();
        for (const auto& imp : f.impacts)
            impacts.push_back({{"aspect", imp.target_aspect_id}, {"polarity", to_string(imp.polarity)}, {"justification", imp.justification}});
        j["impacts"] = impacts;
        json refs = json::object();
        for (const auto& r : f.evaluation.measures)
            refs[r.measure_id] = r.weight;
        j["evaluation"] = {{"direction", to_string(f.evaluation.direction)}, {"min", f.evaluation.min_threshold}, {"max", f.evaluation.max_threshold}, {"measures", refs}};
        factors.push_back(std::move(j));
    }
    doc["factors"] = factors;

    json measures = json::array();
    for (const auto& m : model.measures) {
        json j = {{"id", m.id}, {"name", m.name}, {"kind", to_string(m.kind)}, {"unit", to_string(m.unit)}};
        if (!m.description.empty())
            j["description"] = m.description;
        measures.push_back(std::move(j));
    }
    doc["measures"] = measures;

    return doc.dump(2) + "\n";
}

void save_model(const QualityModel& model, const std::filesystem::path& path)
{
    write_text_file(path, dump_model(model));
}

} // namespace qualens
