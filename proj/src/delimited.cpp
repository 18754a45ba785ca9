#include "readerbench/delimited.hpp"

#include "readerbench/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rbench {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.emplace_back(trim(piece));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::size_t DelimitedTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    fail(ErrorKind::Validation, "missing column '" + std::string(name) + "'");
}

DelimitedTable parse_delimited(std::string_view text, std::string_view source) {
    DelimitedTable table;
    char delim = ',';
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        const std::string_view stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        if (!have_header) {
            delim = stripped.find('\t') != std::string_view::npos ? '\t' : ',';
            table.header = split(stripped, delim);
            have_header = true;
            continue;
        }
        auto cells = split(stripped, delim);
        if (cells.size() != table.header.size()) {
            fail(ErrorKind::Validation, std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(table.header.size()) + " fields, got " +
                                            std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) {
        fail(ErrorKind::Validation, std::string(source) + ": missing header row");
    }
    return table;
}

std::string read_text_file(const std::filesystem::path& path) {
    // A missing input is the caller's error; an unreadable one is I/O.
    if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, "no such file " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

DelimitedTable read_delimited(const std::filesystem::path& path) {
    return parse_delimited(read_text_file(path), path.string());
}

int parse_int_field(std::string_view value, std::string_view field, std::string_view where) {
    int out = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || value.empty()) {
        fail(ErrorKind::Validation,
             std::string(where) + ": field " + std::string(field) + " is not an integer: '" + std::string(value) + "'");
    }
    return out;
}

double parse_double_field(std::string_view value, std::string_view field, std::string_view where) {
    try {
        std::size_t used = 0;
        const std::string s(value);
        const double out = std::stod(s, &used);
        if (used == s.size()) return out;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::Validation,
         std::string(where) + ": field " + std::string(field) + " is not a number: '" + std::string(value) + "'");
}

}  // namespace rbench
