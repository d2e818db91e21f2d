#include "qualens/dataset.hpp"

#include "qualens/csv.hpp"
#include "qualens/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <set>

namespace qualens {

std::string_view to_string(YKind kind)
{
    return kind == YKind::continuous_grade ? "continuous-grade" : "discrete-grade";
}

YKind parse_y_kind(std::string_view text)
{
    if (text == "continuous-grade" || text == "continuous")
        return YKind::continuous_grade;
    if (text == "discrete-grade" || text == "discrete")
        return YKind::discrete_grade;
    throw ParseError(fmt::format("unknown y kind '{}' (expected continuous-grade or discrete-grade)", text));
}

std::vector<double> Dataset::column(std::size_t c) const
{
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r)
        out[r] = at(r, c);
    return out;
}

int Dataset::column_index(std::string_view measure_id) const
{
    auto it = std::find(measure_ids.begin(), measure_ids.end(), measure_id);
    return it == measure_ids.end() ? -1 : static_cast<int>(it - measure_ids.begin());
}

void Dataset::validate() const
{
    if (rows() < 2)
        throw ValidationError(fmt::format("dataset needs at least 2 systems, has {}", rows()));
    if (x.size() != rows() * cols())
        throw ValidationError("dataset matrix size does not match rows x columns");
    if (system_ids.size() != rows())
        throw ValidationError("dataset system id count does not match rows");
    if (expert_flags.size() != cols())
        throw ValidationError("dataset expert flag count does not match columns");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::isnan(x[i]))
            throw ValidationError(fmt::format("dataset: NaN in row {} column '{}'", i / cols(), measure_ids[i % cols()]));
    for (std::size_t r = 0; r < rows(); ++r) {
        if (std::isnan(y[r]))
            throw ValidationError(fmt::format("dataset: NaN dependent value in row {}", r));
        if (y_kind == YKind::discrete_grade && y[r] != std::round(y[r]))
            throw ValidationError(fmt::format("dataset: non-integer grade {} in row {} of a discrete-grade dataset", y[r], r));
    }
}

std::vector<std::size_t> canonical_order(const Dataset& data)
{
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    if (data.system_ids.size() == data.rows()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.system_ids[a] < data.system_ids[b]; });
    }
    return order;
}

Dataset select_columns(const Dataset& data, std::span<const std::size_t> columns)
{
    Dataset out;
    out.system_ids = data.system_ids;
    out.y = data.y;
    out.y_kind = data.y_kind;
    for (auto c : columns) {
        out.measure_ids.push_back(data.measure_ids.at(c));
        out.expert_flags.push_back(data.expert_flags.at(c));
    }
    out.x.reserve(data.rows() * columns.size());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (auto c : columns)
            out.x.push_back(data.at(r, c));
    return out;
}

Dataset without_expert_columns(const Dataset& data)
{
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < data.cols(); ++c)
        if (!data.expert_flags[c])
            keep.push_back(c);
    return select_columns(data, keep);
}

std::string format_dataset_csv(const Dataset& data)
{
    std::string expert;
    for (std::size_t c = 0; c < data.cols(); ++c)
        if (data.expert_flags[c])
            expert += (expert.empty() ? "" : ",") + data.measure_ids[c];

    std::string out = "#expert: " + expert + "\n";
    out += fmt::format("#y_kind: {}\n", to_string(data.y_kind));
    std::vector<std::string> header{"system_id", "y"};
    header.insert(header.end(), data.measure_ids.begin(), data.measure_ids.end());
    out += csv::join(header) + "\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::vector<std::string> row{data.system_ids[r], csv::format_number(data.y[r])};
        for (std::size_t c = 0; c < data.cols(); ++c)
            row.push_back(csv::format_number(data.at(r, c)));
        out += csv::join(row) + "\n";
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

} // namespace

Dataset parse_dataset_csv(std::string_view text)
{
    const auto table = csv::parse(text);
    if (table.header.size() < 2 || table.header[0] != "system_id" || table.header[1] != "y")
        throw ParseError("dataset csv: header must start with 'system_id,y'");

    Dataset data;
    data.y_kind = YKind::continuous_grade;
    std::set<std::string> expert;
    for (const auto& comment : table.comments) {
        std::string_view c = trim(comment);
        if (c.starts_with("expert:")) {
            std::string_view list = trim(c.substr(7));
            while (!list.empty()) {
                const auto comma = list.find(',');
                auto item = trim(list.substr(0, comma));
                if (!item.empty())
                    expert.emplace(item);
                if (comma == std::string_view::npos)
                    break;
                list.remove_prefix(comma + 1);
            }
        } else if (c.starts_with("y_kind:")) {
            data.y_kind = parse_y_kind(trim(c.substr(7)));
        }
    }

    data.measure_ids.assign(table.header.begin() + 2, table.header.end());
    for (const auto& id : data.measure_ids)
        data.expert_flags.push_back(expert.count(id) > 0);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        data.system_ids.push_back(row[0]);
        data.y.push_back(csv::parse_number(row[1], fmt::format("dataset row {} y", r + 1)));
        for (std::size_t c = 2; c < row.size(); ++c)
            data.x.push_back(csv::parse_number(row[c], fmt::format("dataset row {} column '{}'", r + 1, table.header[c])));
    }
    data.validate();
    return data;
}

Dataset read_dataset(const std::filesystem::path& path)
{
    return parse_dataset_csv(read_text_file(path));
}

void write_dataset(const Dataset& data, const std::filesystem::path& path)
{
    write_text_file(path, format_dataset_csv(data));
}

} // namespace qualens
