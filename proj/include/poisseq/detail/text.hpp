#ifndef POISSEQ_DETAIL_TEXT_HPP
#define POISSEQ_DETAIL_TEXT_HPP

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "poisseq/error.hpp"

namespace poisseq::detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

/// Parses a complete cell as a double; returns nullopt unless every
/// character is consumed. A leading '+' is accepted.
inline std::optional<double> parse_double(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

/// Shortest decimal text that reads back to the identical double.
inline std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ec == std::errc() ? ptr : buffer);
}

/// Reads a text file into lines, dropping '\r' line endings and trailing
/// blank lines.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
}

} // namespace poisseq::detail

#endif
