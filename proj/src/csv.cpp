#include "qualens/csv.hpp"

#include "qualens/error.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace qualens::csv {

int Table::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_record(std::string_view text, std::size_t& pos, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;

    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    pos += 2;
                    continue;
                }
                quoted = false;
                ++pos;
                continue;
            }
            field += c;
            ++pos;
            continue;
        }
        if (c == '"' && field.empty() && !field_started_quoted) {
            quoted = true;
            field_started_quoted = true;
            ++pos;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            field_started_quoted = false;
            ++pos;
            continue;
        }
        if (c == '\r') {
            ++pos;
            continue;
        }
        if (c == '\n') {
            ++pos;
            break;
        }
        field += c;
        ++pos;
    }
    if (quoted)
        throw ParseError(fmt::format("csv line {}: unterminated quoted field", line_no));
    fields.push_back(std::move(field));
    return fields;
}

} // namespace

Table parse(std::string_view text)
{
    Table table;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;

    while (pos < text.size()) {
        ++line_no;
        const std::size_t line_end = text.find('\n', pos);
        std::string_view line = text.substr(pos, line_end == std::string_view::npos ? std::string_view::npos : line_end - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        if (line.empty()) {
            pos = line_end == std::string_view::npos ? text.size() : line_end + 1;
            continue;
        }
        if (!have_header && line.front() == '#') {
            table.comments.emplace_back(line.substr(1));
            pos = line_end == std::string_view::npos ? text.size() : line_end + 1;
            continue;
        }

        auto fields = split_record(text, pos, line_no);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError(fmt::format("csv line {}: expected {} fields, found {}", line_no, table.header.size(), fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (!have_header)
        throw ParseError("csv: missing header line");
    return table;
}

Table read_file(const std::filesystem::path& path)
{
    return parse(read_text_file(path));
}

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join(const std::vector<std::string>& fields)
{
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out += ',';
        out += escape(fields[i]);
    }
    return out;
}

std::string format_number(double value)
{
    if (value == 0.0)
        return "0";
    return fmt::format("{}", value);
}

double parse_number(std::string_view text, std::string_view context)
{
    while (!text.empty() && text.front() == ' ')
        text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ')
        text.remove_suffix(1);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw ParseError(fmt::format("{}: '{}' is not a number", context, text));
    if (std::isnan(value))
        throw ParseError(fmt::format("{}: NaN is not allowed", context));
    return value;
}

} // namespace qualens::csv

namespace qualens {

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw IoError(fmt::format("failed writing '{}'", path.string()));
}

} // namespace qualens
