#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaffect::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source file
    std::vector<std::string> cells;
};

struct Table {
    std::vector<Row> rows;  // includes the header row, if any
};

// Comma separated, no quoting. Blank lines are skipped; cells are trimmed.
// Throws DataError when the file cannot be opened.
Table read(const std::filesystem::path& path);

std::optional<double> parse_number(std::string_view cell);

// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, const std::string& text);

std::string join(const std::vector<std::string>& cells);

}  // namespace gazeaffect::csv
