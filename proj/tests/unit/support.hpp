#ifndef QUALENS_TESTS_SUPPORT_HPP
#define QUALENS_TESTS_SUPPORT_HPP

#include "qualens/dataset.hpp"
#include "qualens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qualens::test {

inline std::filesystem::path data_dir()
{
    return QUALENS_DATA_DIR;
}

/// Dataset with standard-normal columns m1..mk and the given y values.
inline Dataset gaussian_dataset(std::size_t n, std::size_t k, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d;
    for (std::size_t i = 0; i < n; ++i)
        d.system_ids.push_back("s" + std::to_string(1000 + i));
    for (std::size_t j = 0; j < k; ++j)
        d.measure_ids.push_back("m" + std::to_string(j + 1));
    d.expert_flags.assign(k, false);
    d.x.resize(n * k);
    for (auto& v : d.x)
        v = rng.normal();
    d.y.assign(n, 3.5);
    return d;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c]))
                p = r;
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j)
                a[r][j] -= f * a[c][j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j)
            s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Intercept followed by slopes, from the normal equations X'X b = X'y.
inline std::vector<double> normal_equations(const Dataset& d, const std::vector<std::size_t>& cols)
{
    const std::size_t p = cols.size() + 1;
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        std::vector<double> row{1.0};
        for (auto c : cols)
            row.push_back(d.at(r, c));
        for (std::size_t i = 0; i < p; ++i) {
            xty[i] += row[i] * d.y[r];
            for (std::size_t j = 0; j < p; ++j)
                xtx[i][j] += row[i] * row[j];
        }
    }
    return solve_dense(xtx, xty);
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = std::numeric_limits<double>::infinity();
};

inline double gini(const std::vector<int>& labels)
{
    if (labels.empty())
        return 0.0;
    std::vector<double> counts(7, 0.0);
    for (int l : labels)
        counts[static_cast<std::size_t>(l)] += 1.0;
    double g = 1.0;
    for (double c : counts)
        g -= (c / labels.size()) * (c / labels.size());
    return g;
}

// Every (feature, midpoint) candidate, scored by size-weighted child Gini.
inline std::vector<SplitChoice> enumerate_splits(const Dataset& d, std::size_t min_leaf)
{
    std::vector<SplitChoice> out;
    for (std::size_t f = 0; f < d.cols(); ++f) {
        auto values = d.column(f);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            const double thr = 0.5 * (values[i] + values[i + 1]);
            std::vector<int> left;
            std::vector<int> right;
            for (std::size_t r = 0; r < d.rows(); ++r)
                (d.at(r, f) <= thr ? left : right).push_back(static_cast<int>(d.y[r]));
            if (left.size() < min_leaf || right.size() < min_leaf)
                continue;
            out.push_back({static_cast<int>(f), thr, left.size() * gini(left) + right.size() * gini(right)});
        }
    }
    return out;
}

/// Gaussian features with uniform random grades 1..6.
inline Dataset grade_dataset(std::size_t n, std::size_t k, std::uint64_t seed)
{
    auto d = gaussian_dataset(n, k, seed);
    d.y_kind = YKind::discrete_grade;
    Rng rng(seed, Stream::experiment);
    for (auto& y : d.y)
        y = static_cast<double>(1 + rng.index(6));
    return d;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace qualens::test

#endif
