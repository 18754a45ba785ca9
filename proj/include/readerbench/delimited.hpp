#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rbench {

// A parsed delimited text file: a header row plus data rows. Comma or tab
// separated (detected from the header line); blank lines and lines starting
// with '#' are skipped.
struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    // Column index by name; throws Validation when absent.
    std::size_t column(std::string_view name) const;
};

DelimitedTable parse_delimited(std::string_view text, std::string_view source = "<input>");
DelimitedTable read_delimited(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

int parse_int_field(std::string_view value, std::string_view field, std::string_view where);
double parse_double_field(std::string_view value, std::string_view field, std::string_view where);

}  // namespace rbench
