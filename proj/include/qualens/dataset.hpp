#ifndef QUALENS_DATASET_HPP
#define QUALENS_DATASET_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qualens {

enum class YKind { continuous_grade, discrete_grade };

std::string_view to_string(YKind kind);
YKind parse_y_kind(std::string_view text);

/// Systems x measures feature matrix with the dependent grade per system.
/// X is stored row-major.
struct Dataset {
    std::vector<std::string> system_ids;
    std::vector<std::string> measure_ids;
    std::vector<bool> expert_flags;
    std::vector<double> x;
    std::vector<double> y;
    YKind y_kind = YKind::continuous_grade;

    std::size_t rows() const { return y.size(); }
    std::size_t cols() const { return measure_ids.size(); }
    double at(std::size_t row, std::size_t col) const { return x[row * cols() + col]; }
    std::span<const double> row(std::size_t r) const { return {x.data() + r * cols(), cols()}; }
    std::vector<double> column(std::size_t c) const;

    /// Column position of a measure id, or -1.
    int column_index(std::string_view measure_id) const;

    /// Throws ValidationError unless shapes agree, n >= 2 and no value is NaN.
    void validate() const;
};

/// Row indices sorted by system id (row index breaks ties). Every seeded
/// resampling draws positions in this order, so input row order never
/// affects results.
std::vector<std::size_t> canonical_order(const Dataset& data);

/// Keeps only the listed columns (in the given order).
Dataset select_columns(const Dataset& data, std::span<const std::size_t> columns);

/// Drops every column flagged as expert-based.
Dataset without_expert_columns(const Dataset& data);

/// Dataset CSV: `#expert:` and `#y_kind:` comment lines, then
/// `system_id,y,<measures...>`.
std::string format_dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(std::string_view text);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

} // namespace qualens

#endif
