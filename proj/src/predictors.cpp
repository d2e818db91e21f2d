#include "qualens/predictors.hpp"

#include "qualens/parallel.hpp"
#include "qualens/rng.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <numeric>

namespace qualens {

using nlohmann::json;

std::string_view to_string(PredictorKind kind)
{
    switch (kind) {
    case PredictorKind::random_guess:
        return "random-guess";
    case PredictorKind::ols:
        return "ols";
    case PredictorKind::cart:
        return "cart";
    case PredictorKind::random_forest:
        return "random-forest";
    }
    return "?";
}

PredictorKind parse_predictor_kind(std::string_view text)
{
    if (text == "random-guess")
        return PredictorKind::random_guess;
    if (text == "ols")
        return PredictorKind::ols;
    if (text == "cart")
        return PredictorKind::cart;
    if (text == "random-forest" || text == "rf")
        return PredictorKind::random_forest;
    throw ParseError(fmt::format("unknown predictor kind '{}' (expected random-guess, ols, cart or random-forest)", text));
}

std::vector<std::size_t> all_rows(const Dataset& data)
{
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

namespace {

void check_columns(const Dataset& data, std::span<const std::size_t> columns)
{
    for (auto c : columns)
        if (c >= data.cols())
            throw ValidationError(fmt::format("column index {} out of range ({} columns)", c, data.cols()));
    std::vector<std::size_t> sorted(columns.begin(), columns.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("duplicate column in predictor column list");
}

Predictor make_predictor(PredictorKind kind, const Dataset& data, std::span<const std::size_t> columns)
{
    Predictor p;
    p.kind = kind;
    p.columns.assign(columns.begin(), columns.end());
    for (auto c : columns)
        p.column_ids.push_back(data.measure_ids[c]);
    return p;
}

// Gini split search over integer class labels.

struct CartBuilder {
    const Dataset& data;
    std::span<const std::size_t> columns;
    const CartParams& params;
    std::vector<double> classes;
    std::vector<int> label; // class index per dataset row
    double root_total = 0.0; // n * gini at the root
    Rng* rng = nullptr;
    std::size_t m_try = 0;
    DecisionTree tree;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -1.0;
    };

    std::vector<std::size_t> counts(std::span<const std::size_t> rows) const
    {
        std::vector<std::size_t> c(classes.size(), 0);
        for (auto r : rows)
            ++c[static_cast<std::size_t>(label[r])];
        return c;
    }

    static double sum_squares(const std::vector<std::size_t>& c)
    {
        double s = 0.0;
        for (auto v : c)
            s += static_cast<double>(v) * static_cast<double>(v);
        return s;
    }

    double majority(const std::vector<std::size_t>& c) const
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < c.size(); ++i)
            if (c[i] > c[best])
                best = i;
        return classes[best];
    }

    std::vector<std::size_t> candidate_features()
    {
        std::vector<std::size_t> features(columns.size());
        std::iota(features.begin(), features.end(), 0);
        if (rng != nullptr && m_try < features.size()) {
            for (std::size_t i = 0; i < m_try; ++i) {
                auto j = i + static_cast<std::size_t>(rng->index(features.size() - i));
                std::swap(features[i], features[j]);
            }
            features.resize(m_try);
            std::sort(features.begin(), features.end());
        }
        return features;
    }

    Split best_split(std::span<const std::size_t> rows, const std::vector<std::size_t>& node_counts)
    {
        Split best;
        const std::size_t n = rows.size();
        const auto min_leaf = static_cast<std::size_t>(params.min_leaf);
        std::vector<std::pair<double, int>> pairs(n);
        std::vector<std::size_t> left(classes.size());
        std::vector<std::size_t> right(classes.size());
        for (auto f : candidate_features()) {
            const std::size_t col = columns[f];
            for (std::size_t i = 0; i < n; ++i)
                pairs[i] = {data.at(rows[i], col), label[rows[i]]};
            std::sort(pairs.begin(), pairs.end());
            std::fill(left.begin(), left.end(), 0);
            right = node_counts;
            double sum_left = 0.0;
            double sum_right = sum_squares(node_counts);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = static_cast<std::size_t>(pairs[i].second);
                sum_left += 2.0 * static_cast<double>(left[c]) + 1.0;
                ++left[c];
                sum_right -= 2.0 * static_cast<double>(right[c]) - 1.0;
                --right[c];
                const std::size_t n_left = i + 1;
                if (n_left < min_leaf)
                    continue;
                if (n - n_left < min_leaf)
                    break;
                if (pairs[i].first == pairs[i + 1].first)
                    continue;
                const double score = sum_left / static_cast<double>(n_left) + sum_right / static_cast<double>(n - n_left);
                if (score > best.score) {
                    double threshold = 0.5 * (pairs[i].first + pairs[i + 1].first);
                    if (threshold >= pairs[i + 1].first)
                        threshold = pairs[i].first;
                    best = {static_cast<int>(f), threshold, score};
                }
            }
        }
        return best;
    }

    int grow(std::vector<std::size_t> rows, int depth)
    {
        const auto node_counts = counts(rows);
        const double n = static_cast<double>(rows.size());
        const double ss = sum_squares(node_counts);
        TreeNode node;
        node.samples = rows.size();
        node.gini = 1.0 - ss / (n * n);
        node.value = majority(node_counts);
        const int index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);

        const bool pure = ss == n * n;
        if (pure || depth >= params.max_depth || rows.size() < 2 * static_cast<std::size_t>(params.min_leaf) || root_total <= 0.0)
            return index;
        const Split split = best_split(rows, node_counts);
        if (split.feature < 0)
            return index;
        const double decrease = split.score - ss / n;
        if (!(decrease > 1e-12 * n) || !(decrease / root_total > params.complexity_parameter))
            return index;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        const std::size_t col = columns[static_cast<std::size_t>(split.feature)];
        for (auto r : rows)
            (data.at(r, col) <= split.threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(index)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(index)].threshold = split.threshold;
        const int l = grow(std::move(left_rows), depth + 1);
        const int r = grow(std::move(right_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(index)].left = l;
        tree.nodes[static_cast<std::size_t>(index)].right = r;
        return index;
    }
};

void check_cart_input(const Dataset& data, std::size_t n_rows, const CartParams& params)
{
    if (data.y_kind != YKind::discrete_grade)
        throw ValidationError("CART requires discrete grades");
    if (params.min_leaf < 1)
        throw ValidationError("min_leaf must be positive");
    if (params.max_depth < 1)
        throw ValidationError("max_depth must be positive");
    if (!(params.complexity_parameter >= 0.0))
        throw ValidationError("complexity parameter must be >= 0");
    if (n_rows < 2 * static_cast<std::size_t>(params.min_leaf))
        throw ValidationError(fmt::format("CART needs at least {} systems (2 x min_leaf), has {}", 2 * params.min_leaf, n_rows));
}

std::vector<double> class_values(const Dataset& data, std::span<const std::size_t> rows)
{
    std::vector<double> classes;
    for (auto r : rows) {
        if (data.y[r] != std::round(data.y[r]))
            throw ValidationError(fmt::format("CART requires discrete grades, got {} for '{}'", data.y[r], data.system_ids[r]));
        classes.push_back(data.y[r]);
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

DecisionTree build_tree(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns,
    const CartParams& params, const std::vector<double>& classes, Rng* rng, std::size_t m_try)
{
    CartBuilder builder{data, columns, params, classes, {}, 0.0, rng, m_try, {}};
    builder.label.assign(data.rows(), 0);
    for (auto r : rows)
        builder.label[r] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), data.y[r]) - classes.begin());
    const auto root_counts = builder.counts(rows);
    const double n = static_cast<double>(rows.size());
    builder.root_total = n - CartBuilder::sum_squares(root_counts) / n;
    builder.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return std::move(builder.tree);
}

double clamp_grade(double v)
{
    return std::clamp(v, 1.0, 6.0);
}

} // namespace

double DecisionTree::predict(std::span<const double> row, std::span<const std::size_t> columns) const
{
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const double v = row[columns[static_cast<std::size_t>(nodes[i].feature)]];
        i = static_cast<std::size_t>(v <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].value;
}

std::vector<std::size_t> DecisionTree::used_features() const
{
    std::vector<std::size_t> out;
    for (const auto& n : nodes)
        if (n.feature >= 0)
            out.push_back(static_cast<std::size_t>(n.feature));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t DecisionTree::depth() const
{
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t max_depth = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        max_depth = std::max(max_depth, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return max_depth;
}

Predictor fit_random_guess(const Dataset& data, std::span<const std::size_t> rows)
{
    if (rows.size() < 2)
        throw ValidationError(fmt::format("random guessing needs at least 2 systems, has {}", rows.size()));
    Predictor p = make_predictor(PredictorKind::random_guess, data, {});
    RandomGuessModel m;
    for (auto r : rows)
        m.values.push_back(data.y.at(r));
    p.state = std::move(m);
    return p;
}

Predictor fit_ols(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns)
{
    check_columns(data, columns);
    const std::size_t n = rows.size();
    const std::size_t k = columns.size();
    if (n <= k + 1)
        throw ValidationError(fmt::format("OLS with {} columns needs more than {} systems, has {}", k, k + 1, n));

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = data.y[rows[i]];
        for (std::size_t j = 0; j < k; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data.at(rows[i], columns[j]);
    }
    const double y_mean = y.mean();
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    X.rowwise() -= x_mean;
    y.array() -= y_mean;

    Eigen::VectorXd scale(static_cast<Eigen::Index>(k));
    std::vector<std::string> constant;
    for (std::size_t j = 0; j < k; ++j) {
        const double norm = X.col(static_cast<Eigen::Index>(j)).norm();
        if (!(norm > 0.0))
            constant.push_back(data.measure_ids[columns[j]]);
        scale(static_cast<Eigen::Index>(j)) = norm > 0.0 ? norm : 1.0;
    }
    if (!constant.empty())
        throw RankDeficientError(fmt::format("OLS design is rank-deficient: zero-variance columns {}", fmt::join(constant, ", ")), constant);
    for (std::size_t j = 0; j < k; ++j)
        X.col(static_cast<Eigen::Index>(j)) /= scale(static_cast<Eigen::Index>(j));

    OlsModel m;
    m.intercept = y_mean;
    if (k > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-10);
        const auto rank = static_cast<std::size_t>(qr.rank());
        if (rank < k) {
            std::vector<std::string> collinear;
            for (std::size_t j = rank; j < k; ++j)
                collinear.push_back(data.measure_ids[columns[static_cast<std::size_t>(qr.colsPermutation().indices()(static_cast<Eigen::Index>(j)))]]);
            std::sort(collinear.begin(), collinear.end());
            throw RankDeficientError(fmt::format("OLS design is rank-deficient: collinear columns {}", fmt::join(collinear, ", ")), collinear);
        }
        const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);
        m.coefficients.assign(beta.data(), beta.data() + k);
        m.intercept = y_mean - x_mean.dot(beta);
    }
    Predictor p = make_predictor(PredictorKind::ols, data, columns);
    p.state = std::move(m);
    return p;
}

Predictor fit_cart(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns, const CartParams& params)
{
    check_columns(data, columns);
    check_cart_input(data, rows.size(), params);
    Predictor p = make_predictor(PredictorKind::cart, data, columns);
    p.state = build_tree(data, rows, columns, params, class_values(data, rows), nullptr, columns.size());
    return p;
}

Predictor fit_forest(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns,
    const ForestParams& params, std::uint64_t seed)
{
    check_columns(data, columns);
    check_cart_input(data, rows.size(), params.cart);
    if (params.n_trees < 1)
        throw ValidationError("n_trees must be positive");
    if (params.m_try < 0)
        throw ValidationError("m_try must be positive");
    std::size_t m_try = static_cast<std::size_t>(params.m_try);
    if (m_try == 0)
        m_try = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(columns.size()))));
    if (m_try > columns.size())
        throw ValidationError(fmt::format("m_try {} exceeds the number of columns {}", m_try, columns.size()));

    // Bootstrap positions refer to rows sorted by system id, so input order
    // does not matter.
    std::vector<std::size_t> ordered(rows.begin(), rows.end());
    std::stable_sort(ordered.begin(), ordered.end(), [&](std::size_t a, std::size_t b) {
        if (data.system_ids.size() != data.rows())
            return a < b;
        return data.system_ids[a] < data.system_ids[b];
    });
    const auto classes = class_values(data, rows);

    ForestModel forest;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    parallel_for(forest.trees.size(), [&](std::size_t b) {
        Rng rng(seed, Stream::forest_tree, b);
        std::vector<std::size_t> sample;
        if (params.bootstrap) {
            sample.resize(ordered.size());
            for (auto& s : sample)
                s = ordered[static_cast<std::size_t>(rng.index(ordered.size()))];
        } else {
            sample = ordered;
        }
        forest.trees[b] = build_tree(data, sample, columns, params.cart, classes, &rng, m_try);
    });
    Predictor p = make_predictor(PredictorKind::random_forest, data, columns);
    p.seed = seed;
    p.state = std::move(forest);
    return p;
}

Predictor fit_random_guess(const Dataset& data)
{
    return fit_random_guess(data, all_rows(data));
}

Predictor fit_ols(const Dataset& data, std::span<const std::size_t> columns)
{
    return fit_ols(data, all_rows(data), columns);
}

Predictor fit_cart(const Dataset& data, std::span<const std::size_t> columns, const CartParams& params)
{
    return fit_cart(data, all_rows(data), columns, params);
}

Predictor fit_forest(const Dataset& data, std::span<const std::size_t> columns, const ForestParams& params, std::uint64_t seed)
{
    return fit_forest(data, all_rows(data), columns, params, seed);
}

Predictor fit(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns, const PredictorSpec& spec)
{
    switch (spec.kind) {
    case PredictorKind::random_guess: {
        Predictor p = fit_random_guess(data, rows);
        p.seed = spec.seed;
        return p;
    }
    case PredictorKind::ols:
        return fit_ols(data, rows, columns);
    case PredictorKind::cart:
        return fit_cart(data, rows, columns, spec.cart);
    case PredictorKind::random_forest:
        return fit_forest(data, rows, columns, spec.forest, spec.seed);
    }
    throw InternalError("unknown predictor kind");
}

double predict(const Predictor& predictor, std::span<const double> row)
{
    for (std::size_t j = 0; j < predictor.columns.size(); ++j) {
        const auto c = predictor.columns[j];
        if (c >= row.size())
            throw ValidationError(fmt::format("row has {} values, predictor reads column {}", row.size(), c));
        if (std::isnan(row[c]))
            throw ValidationError(fmt::format("NaN in predictor column '{}'", predictor.column_ids[j]));
    }
    switch (predictor.kind) {
    case PredictorKind::random_guess: {
        std::uint64_t h = row.size();
        for (double v : row) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            h = splitmix64(h ^ bits);
        }
        Rng rng(predictor.seed, Stream::random_guess, h);
        return predict_random(predictor, rng);
    }
    case PredictorKind::ols: {
        const auto& m = std::get<OlsModel>(predictor.state);
        double v = m.intercept;
        for (std::size_t j = 0; j < m.coefficients.size(); ++j)
            v += m.coefficients[j] * row[predictor.columns[j]];
        return clamp_grade(v);
    }
    case PredictorKind::cart:
        return clamp_grade(std::get<DecisionTree>(predictor.state).predict(row, predictor.columns));
    case PredictorKind::random_forest: {
        const auto& forest = std::get<ForestModel>(predictor.state);
        std::vector<std::pair<double, std::size_t>> votes;
        for (const auto& tree : forest.trees) {
            const double v = tree.predict(row, predictor.columns);
            auto it = std::find_if(votes.begin(), votes.end(), [&](const auto& e) { return e.first == v; });
            if (it == votes.end())
                votes.emplace_back(v, 1);
            else
                ++it->second;
        }
        std::sort(votes.begin(), votes.end());
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it)
            if (it->second > best->second)
                best = it;
        return clamp_grade(best->first);
    }
    }
    throw InternalError("unknown predictor kind");
}

double predict_random(const Predictor& predictor, Rng& rng)
{
    const auto& m = std::get<RandomGuessModel>(predictor.state);
    return m.values[static_cast<std::size_t>(rng.index(m.values.size()))];
}

double predict_random_excluding(const Predictor& predictor, std::size_t target, Rng& rng)
{
    const auto& m = std::get<RandomGuessModel>(predictor.state);
    if (target >= m.values.size())
        throw ValidationError(fmt::format("target index {} out of range ({} training values)", target, m.values.size()));
    auto r = static_cast<std::size_t>(rng.index(m.values.size() - 1));
    if (r >= target)
        ++r;
    return m.values[r];
}

void bind_columns(Predictor& predictor, const Dataset& data)
{
    predictor.columns.clear();
    for (const auto& id : predictor.column_ids) {
        const int c = data.column_index(id);
        if (c < 0)
            throw ValidationError(fmt::format("dataset has no column for predictor measure '{}'", id));
        predictor.columns.push_back(static_cast<std::size_t>(c));
    }
}

namespace {

json tree_to_json(const DecisionTree& tree)
{
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
            {"value", n.value}, {"gini", n.gini}, {"samples", n.samples}});
    }
    return nodes;
}

DecisionTree tree_from_json(const json& j)
{
    DecisionTree tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = n.at("value").get<double>();
        node.gini = n.value("gini", 0.0);
        node.samples = n.value("samples", std::size_t{0});
        tree.nodes.push_back(node);
    }
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0)
        throw ParseError("predictor tree has no nodes");
    for (const auto& n : tree.nodes)
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
            throw ParseError("predictor tree has an out-of-range child index");
    return tree;
}

} // namespace

std::string predictor_to_json(const Predictor& predictor)
{
    json doc;
    doc["kind"] = std::string(to_string(predictor.kind));
    doc["columns"] = predictor.column_ids;
    doc["seed"] = predictor.seed;
    json state;
    switch (predictor.kind) {
    case PredictorKind::random_guess:
        state["values"] = std::get<RandomGuessModel>(predictor.state).values;
        break;
    case PredictorKind::ols: {
        const auto& m = std::get<OlsModel>(predictor.state);
        state["intercept"] = m.intercept;
        state["coefficients"] = m.coefficients;
        break;
    }
    case PredictorKind::cart:
        state["nodes"] = tree_to_json(std::get<DecisionTree>(predictor.state));
        break;
    case PredictorKind::random_forest: {
        json trees = json::array();
        for (const auto& t : std::get<ForestModel>(predictor.state).trees)
            trees.push_back(tree_to_json(t));
        state["trees"] = trees;
        break;
    }
    }
    doc["state"] = state;
    return doc.dump(2) + "\n";
}

Predictor predictor_from_json(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("predictor JSON: {}", e.what()));
    }
    try {
        Predictor p;
        p.kind = parse_predictor_kind(doc.at("kind").get<std::string>());
        p.column_ids = doc.at("columns").get<std::vector<std::string>>();
        p.columns.resize(p.column_ids.size());
        std::iota(p.columns.begin(), p.columns.end(), 0);
        p.seed = doc.value("seed", std::uint64_t{0});
        const json& state = doc.at("state");
        switch (p.kind) {
        case PredictorKind::random_guess:
            p.state = RandomGuessModel{state.at("values").get<std::vector<double>>()};
            if (std::get<RandomGuessModel>(p.state).values.size() < 2)
                throw ParseError("random-guess predictor needs at least 2 stored values");
            break;
        case PredictorKind::ols: {
            OlsModel m{state.at("intercept").get<double>(), state.at("coefficients").get<std::vector<double>>()};
            if (m.coefficients.size() != p.column_ids.size())
                throw ParseError("OLS coefficient count does not match the column count");
            p.state = std::move(m);
            break;
        }
        case PredictorKind::cart:
            p.state = tree_from_json(state.at("nodes"));
            break;
        case PredictorKind::random_forest: {
            ForestModel forest;
            for (const auto& t : state.at("trees"))
                forest.trees.push_back(tree_from_json(t));
            if (forest.trees.empty())
                throw ParseError("forest predictor has no trees");
            p.state = std::move(forest);
            break;
        }
        }
        auto check_tree = [&](const DecisionTree& tree) {
            for (const auto& n : tree.nodes)
                if (n.feature >= static_cast<int>(p.column_ids.size()))
                    throw ParseError("predictor tree references a column outside its column list");
        };
        if (p.kind == PredictorKind::cart)
            check_tree(std::get<DecisionTree>(p.state));
        if (p.kind == PredictorKind::random_forest)
            for (const auto& t : std::get<ForestModel>(p.state).trees)
                check_tree(t);
        return p;
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("predictor JSON: {}", e.what()));
    }
}

} // namespace qualens
