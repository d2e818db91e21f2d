#ifndef QUALENS_CSV_HPP
#define QUALENS_CSV_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qualens::csv {

/// A parsed CSV document. Lines starting with '#' before the header are kept
/// verbatim (without the '#') in `comments`.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position of `name` in the header, or -1.
    int column(std::string_view name) const;
};

Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Joins already-formatted fields into one CSV line (no trailing newline).
std::string join(const std::vector<std::string>& fields);

/// Shortest representation that round-trips to the same double.
std::string format_number(double value);

/// Parses a double; throws ParseError naming `context` on failure.
double parse_number(std::string_view text, std::string_view context);

} // namespace qualens::csv

namespace qualens {

/// Reads a whole file; throws IoError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes a whole file; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace qualens

#endif
