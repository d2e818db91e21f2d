#include "support.hpp"

#include "qualens/predictors.hpp"
#include "qualens/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace qualens;
using test::enumerate_splits;
using test::grade_dataset;
using test::SplitChoice;

namespace {

std::vector<std::size_t> iota_cols(std::size_t k)
{
    std::vector<std::size_t> cols(k);
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
}

} // namespace

TEST_SUITE("predictors")
{
    TEST_CASE("OLS matches the normal-equations oracle")
    {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto d = test::gaussian_dataset(50, 3, seed);
            Rng rng(seed, Stream::resample);
            const double b0 = rng.uniform(2.0, 5.0);
            std::vector<double> beta{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            for (std::size_t r = 0; r < d.rows(); ++r)
                d.y[r] = b0 + beta[0] * d.at(r, 0) + beta[1] * d.at(r, 1) + beta[2] * d.at(r, 2) + 0.3 * rng.normal();

            const auto cols = iota_cols(3);
            const auto oracle = test::normal_equations(d, cols);
            const auto p = fit_ols(d, cols);
            const auto& m = std::get<OlsModel>(p.state);
            CAPTURE(seed);
            CHECK(std::abs(m.intercept - oracle[0]) < 1e-8);
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(std::abs(m.coefficients[j] - oracle[j + 1]) < 1e-8);
        }
    }

    TEST_CASE("OLS names collinear columns")
    {
        auto d = test::gaussian_dataset(30, 3, 3);
        for (std::size_t r = 0; r < d.rows(); ++r)
            d.x[r * 3 + 2] = 2.0 * d.at(r, 0) - d.at(r, 1);
        try {
            fit_ols(d, iota_cols(3));
            FAIL("expected rank deficiency");
        } catch (const RankDeficientError& e) {
            CHECK_FALSE(e.collinear_columns.empty());
        }
        auto constant = test::gaussian_dataset(30, 2, 4);
        for (std::size_t r = 0; r < constant.rows(); ++r)
            constant.x[r * 2 + 1] = 1.0;
        CHECK_THROWS_AS(fit_ols(constant, iota_cols(2)), RankDeficientError);
    }

    TEST_CASE("OLS predictions are clamped to the grade scale")
    {
        auto d = test::gaussian_dataset(40, 1, 8);
        for (std::size_t r = 0; r < d.rows(); ++r)
            d.y[r] = 3.5 + 10.0 * d.at(r, 0);
        const auto p = fit_ols(d, iota_cols(1));
        const std::vector<double> high{5.0};
        const std::vector<double> low{-5.0};
        CHECK(predict(p, high) == 6.0);
        CHECK(predict(p, low) == 1.0);
    }

    TEST_CASE("CART root split equals exhaustive enumeration")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            for (int min_leaf : {1, 5}) {
                const auto d = grade_dataset(20, 4, 100 + seed);
                const auto p = fit_cart(d, iota_cols(4), CartParams{0.0, min_leaf, 20});
                const auto& tree = std::get<DecisionTree>(p.state);
                const auto candidates = enumerate_splits(d, static_cast<std::size_t>(min_leaf));
                REQUIRE_FALSE(candidates.empty());
                auto best = *std::min_element(candidates.begin(), candidates.end(),
                    [](const SplitChoice& a, const SplitChoice& b) { return a.weighted_gini < b.weighted_gini; });
                CAPTURE(seed);
                CAPTURE(min_leaf);
                const auto& root = tree.nodes.front();
                REQUIRE(root.feature >= 0);
                SplitChoice chosen;
                for (const auto& c : candidates)
                    if (c.feature == root.feature && c.threshold == root.threshold)
                        chosen = c;
                CHECK(chosen.weighted_gini == doctest::Approx(best.weighted_gini).epsilon(1e-12));
                std::size_t ties = 0;
                for (const auto& c : candidates)
                    ties += std::abs(c.weighted_gini - best.weighted_gini) < 1e-9;
                if (ties == 1) {
                    CHECK(root.feature == best.feature);
                    CHECK(root.threshold == best.threshold);
                }
            }
        }
    }

    TEST_CASE("CART weighted impurity never increases along a path")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto d = grade_dataset(120, 5, seed);
            const auto p = fit_cart(d, iota_cols(5), CartParams{0.0, 3, 20});
            const auto& nodes = std::get<DecisionTree>(p.state).nodes;
            for (const auto& n : nodes) {
                if (n.feature < 0)
                    continue;
                const auto& l = nodes[static_cast<std::size_t>(n.left)];
                const auto& r = nodes[static_cast<std::size_t>(n.right)];
                CHECK(l.samples + r.samples == n.samples);
                CHECK(l.samples * l.gini + r.samples * r.gini <= n.samples * n.gini + 1e-9);
            }
        }
    }

    TEST_CASE("CART rejects continuous grades")
    {
        auto d = grade_dataset(30, 2, 9);
        d.y[0] = 2.5;
        CHECK_THROWS(fit_cart(d, iota_cols(2), CartParams{}));
    }

    TEST_CASE("single-tree forest without bootstrap equals CART")
    {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto d = grade_dataset(80, 4, 300 + seed);
            const auto cols = iota_cols(4);
            ForestParams fp;
            fp.n_trees = 1;
            fp.bootstrap = false;
            fp.m_try = 4;
            const auto forest = fit_forest(d, cols, fp, seed);
            const auto cart = fit_cart(d, cols, fp.cart);
            const auto probe = grade_dataset(200, 4, 900 + seed);
            for (std::size_t r = 0; r < probe.rows(); ++r)
                CHECK(predict(forest, probe.row(r)) == predict(cart, probe.row(r)));
        }
    }

    TEST_CASE("forest fits a separable fixture perfectly")
    {
        auto d = test::gaussian_dataset(100, 3, 42);
        d.y_kind = YKind::discrete_grade;
        for (std::size_t r = 0; r < d.rows(); ++r)
            d.y[r] = d.at(r, 1) < 0.0 ? 2.0 : 5.0;
        ForestParams fp;
        fp.n_trees = 50;
        const auto f = fit_forest(d, iota_cols(3), fp, 42);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < d.rows(); ++r)
            correct += predict(f, d.row(r)) == d.y[r];
        CHECK(correct == d.rows());
    }

    TEST_CASE("forest is reproducible for a seed")
    {
        const auto d = grade_dataset(60, 4, 77);
        ForestParams fp;
        fp.n_trees = 20;
        const auto a = fit_forest(d, iota_cols(4), fp, 3);
        const auto b = fit_forest(d, iota_cols(4), fp, 3);
        CHECK(predictor_to_json(a) == predictor_to_json(b));
    }

    TEST_CASE("random guessing over uniform grades averages 3.5")
    {
        Dataset d = test::gaussian_dataset(60, 1, 1);
        for (std::size_t r = 0; r < d.rows(); ++r)
            d.y[r] = static_cast<double>(1 + r % 6);
        const auto p = fit_random_guess(d);
        Rng rng(42, Stream::random_guess);
        double sum = 0.0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i)
            sum += predict_random(p, rng);
        CHECK(std::abs(sum / draws - 3.5) <= 0.02);
    }

    TEST_CASE("predictors survive a JSON round trip")
    {
        const auto d = grade_dataset(60, 3, 12);
        const auto cols = iota_cols(3);
        ForestParams fp;
        fp.n_trees = 5;
        for (const auto& p : {fit_ols(d, cols), fit_cart(d, cols, CartParams{0.0, 5, 20}), fit_forest(d, cols, fp, 1)}) {
            auto back = predictor_from_json(predictor_to_json(p));
            bind_columns(back, d);
            for (std::size_t r = 0; r < d.rows(); ++r)
                CHECK(predict(back, d.row(r)) == predict(p, d.row(r)));
        }
    }

    TEST_CASE("NaN input is rejected")
    {
        const auto d = grade_dataset(30, 2, 13);
        const auto p = fit_ols(d, iota_cols(2));
        const std::vector<double> row{1.0, std::nan("")};
        CHECK_THROWS(predict(p, row));
    }
}
