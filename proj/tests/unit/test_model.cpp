#include "support.hpp"

#include "qualens/error.hpp"
#include "qualens/model.hpp"

#include <doctest.h>

#include <string>

using namespace qualens;

namespace {

const char* minimal_model = R"({
  "format_version": 1,
  "name": "minimal",
  "root_aspect": "q",
  "aspects": [{"id": "q", "name": "Quality", "parent": null}],
  "factors": [{"id": "f", "entity": "system", "name": "F",
               "impacts": [{"aspect": "q", "polarity": "positive", "justification": ""}],
               "evaluation": {"direction": "higher-is-more-present", "min": 0, "max": 1, "measures": {"m": 1}}}],
  "measures": [{"id": "m", "name": "M", "kind": "automatic", "unit": "proportion"}]
})";

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

bool any_message_contains(const std::vector<Diagnostic>& ds, const std::string& needle)
{
    for (const auto& d : ds)
        if (d.message.find(needle) != std::string::npos)
            return true;
    return false;
}

} // namespace

TEST_SUITE("model")
{
    TEST_CASE("minimal model loads with default bands")
    {
        std::vector<Diagnostic> warnings;
        const auto m = parse_model(minimal_model, &warnings);
        CHECK(warnings.empty());
        CHECK(m.root_aspect_id == "q");
        CHECK(m.grade_bands == default_grade_bands());
        CHECK(validate_model(m).empty());
    }

    TEST_CASE("demo model loads warning-free and round-trips")
    {
        std::vector<Diagnostic> warnings;
        const auto m = load_model(test::data_dir() / "maintainability-demo.json", &warnings);
        CHECK(warnings.empty());
        CHECK(m.aspects.size() == 3);
        CHECK(m.factors.size() == 6);
        CHECK(m.measures.size() == 12);
        const auto text = dump_model(m);
        const auto again = parse_model(text);
        CHECK(dump_model(again) == text);
    }

    TEST_CASE("impact on unknown aspect names the id")
    {
        const auto bad = replace(minimal_model, R"("aspect": "q")", R"("aspect": "X")");
        try {
            parse_model(bad);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("'X'") != std::string::npos);
        }
    }

    TEST_CASE("all-zero measure weights are rejected")
    {
        auto m = parse_model(minimal_model);
        m.factors[0].evaluation.measures[0].weight = 0.0;
        const auto ds = validate_model(m);
        CHECK(has_errors(ds));
        CHECK(any_message_contains(ds, "no positive weight"));
    }

    TEST_CASE("factor without impacts is a dangling-factor warning")
    {
        auto m = parse_model(minimal_model);
        ProductFactor lonely = m.factors[0];
        lonely.id = "lonely";
        lonely.impacts.clear();
        m.factors.push_back(lonely);
        const auto ds = validate_model(m);
        CHECK_FALSE(has_errors(ds));
        CHECK(any_message_contains(ds, "dangling factor"));
    }

    TEST_CASE("overlapping bands are named")
    {
        auto m = parse_model(minimal_model);
        m.grade_bands = {{0.0, 6}, {0.92, 5}, {0.92, 4}};
        CHECK(any_message_contains(validate_model(m), "grade bands overlap at 0.92"));
    }

    TEST_CASE("cycles and second roots are errors")
    {
        auto m = parse_model(minimal_model);
        m.aspects.push_back({"a", "A", std::string("b"), {}, {}});
        m.aspects.push_back({"b", "B", std::string("a"), {}, {}});
        CHECK(any_message_contains(validate_model(m), "cycle"));

        auto m2 = parse_model(minimal_model);
        m2.aspects.push_back({"r2", "R2", std::nullopt, {}, {}});
        CHECK(any_message_contains(validate_model(m2), "second root"));
    }

    TEST_CASE("malformed json is a parse error")
    {
        CHECK_THROWS_AS(parse_model("{\"format_version\": 1,"), ParseError);
    }

    TEST_CASE("unknown fields warn")
    {
        std::vector<Diagnostic> warnings;
        parse_model(replace(minimal_model, R"("name": "minimal",)", R"("name": "minimal", "colour": "red",)"), &warnings);
        CHECK(any_message_contains(warnings, "colour"));
    }
}
