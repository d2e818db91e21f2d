#ifndef QUALENS_PREDICTORS_HPP
#define QUALENS_PREDICTORS_HPP

#include "qualens/dataset.hpp"
#include "qualens/error.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qualens {

class Rng;

enum class PredictorKind { random_guess, ols, cart, random_forest };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view text);

struct CartParams {
    /// A split is kept only if its impurity decrease, relative to the
    /// root's total impurity, exceeds this value.
    double complexity_parameter = 0.01;
    int min_leaf = 5;
    int max_depth = 20;
};

struct ForestParams {
    int n_trees = 100;
    /// Features sampled per split; 0 means ceil(sqrt(|columns|)).
    int m_try = 0;
    bool bootstrap = true;
    CartParams cart{0.0, 5, 20};
};

/// Everything needed to refit a predictor on a different row subset.
struct PredictorSpec {
    PredictorKind kind = PredictorKind::ols;
    CartParams cart;
    ForestParams forest;
    std::uint64_t seed = 42;
};

struct OlsModel {
    double intercept = 0.0;
    /// One per selected column, in selection order.
    std::vector<double> coefficients;
};

struct TreeNode {
    /// Position in the predictor's selected columns; -1 for a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Majority class of the training rows reaching this node.
    double value = 0.0;
    double gini = 0.0;
    std::size_t samples = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row, std::span<const std::size_t> columns) const;
    /// Sorted, distinct positions of features used in splits.
    std::vector<std::size_t> used_features() const;
    std::size_t depth() const;
};

struct RandomGuessModel {
    std::vector<double> values;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
};

/// A fitted model. `columns` are indices into the dataset it reads rows
/// from; `column_ids` are the same columns by measure id, used to rebind a
/// deserialized predictor to another dataset.
struct Predictor {
    PredictorKind kind = PredictorKind::ols;
    std::vector<std::size_t> columns;
    std::vector<std::string> column_ids;
    std::uint64_t seed = 0;
    std::variant<RandomGuessModel, OlsModel, DecisionTree, ForestModel> state;
};

/// Thrown by fit_ols for a singular design; names the offending columns.
class RankDeficientError : public ValidationError {
public:
    RankDeficientError(std::string message, std::vector<std::string> columns)
        : ValidationError(std::move(message)), collinear_columns(std::move(columns))
    {
    }
    std::vector<std::string> collinear_columns;
};

std::vector<std::size_t> all_rows(const Dataset& data);

Predictor fit_random_guess(const Dataset& data, std::span<const std::size_t> rows);
Predictor fit_ols(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns);
Predictor fit_cart(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns, const CartParams& params);
Predictor fit_forest(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns,
    const ForestParams& params, std::uint64_t seed);

Predictor fit_random_guess(const Dataset& data);
Predictor fit_ols(const Dataset& data, std::span<const std::size_t> columns);
Predictor fit_cart(const Dataset& data, std::span<const std::size_t> columns, const CartParams& params);
Predictor fit_forest(const Dataset& data, std::span<const std::size_t> columns, const ForestParams& params, std::uint64_t seed);

Predictor fit(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> columns, const PredictorSpec& spec);

/// Grade-scale prediction clamped to [1,6]. A random-guess predictor draws
/// from a stream keyed by its seed and the row contents.
double predict(const Predictor& predictor, std::span<const double> row);

/// Random-guess draw with an explicit stream.
double predict_random(const Predictor& predictor, Rng& rng);

/// Leave-one-out protocol: uniform draw from the stored values other than
/// position `target` of the training rows.
double predict_random_excluding(const Predictor& predictor, std::size_t target, Rng& rng);

/// Resolves `column_ids` against the dataset's measure ids.
void bind_columns(Predictor& predictor, const Dataset& data);

std::string predictor_to_json(const Predictor& predictor);
Predictor predictor_from_json(std::string_view text);

} // namespace qualens

#endif
