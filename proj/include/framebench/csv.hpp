#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framebench::csv {

// In-memory delimited table. Fields are raw UTF-8; quoting is resolved at
// parse time and reapplied at write time.
struct Table {
    char delimiter = ',';
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number where each row starts in the source file, for
    // error messages that point at the offending input.
    std::vector<size_t> row_lines;

    std::optional<size_t> column(std::string_view name) const;
    size_t require_column(std::string_view name) const;  // throws SchemaError
};

// delimiter 0 = autodetect from the header record (comma vs tab, whichever
// splits the header into more fields; ties go to comma).
Table parse(std::string_view content, char delimiter = '\0');
Table read_file(const std::string& path, char delimiter = '\0');

std::string format(const Table& table);
void write_file(const std::string& path, const Table& table);

}  // namespace framebench::csv
