#include "framebench/csv.hpp"

#include <fstream>
#include <sstream>

#include "framebench/errors.hpp"

namespace framebench::csv {
namespace {

struct Cursor {
    std::string_view text;
    size_t pos = 0;
    size_t line = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
};

// Reads one record (a row of fields). Quoted fields may contain the
// delimiter, quotes doubled as "", and embedded newlines.
std::vector<std::string> read_record(Cursor& cur, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    for (;;) {
        if (cur.done()) {
            if (in_quotes) throw SchemaError("unterminated quoted field at end of input");
            fields.push_back(std::move(field));
            return fields;
        }
        const char c = cur.take();
        if (in_quotes) {
            if (c == '"') {
                if (!cur.done() && cur.peek() == '"') {
                    field.push_back('"');
                    cur.take();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return fields;
        } else if (c == '\r' && !cur.done() && cur.peek() == '\n') {
            // Unquoted CR-LF line ending; the CR is not field content.
        } else {
            field.push_back(c);
        }
    }
}

char detect_delimiter(std::string_view content) {
    size_t commas = 0;
    size_t tabs = 0;
    bool in_quotes = false;
    for (const char c : content) {
        if (c == '"') in_quotes = !in_quotes;
        if (in_quotes) continue;
        if (c == '\n') break;
        if (c == ',') ++commas;
        if (c == '\t') ++tabs;
    }
    return tabs > commas ? '\t' : ',';
}

bool record_is_blank(const std::vector<std::string>& fields) {
    return fields.size() == 1 && fields[0].empty();
}

bool needs_quotes(const std::string& field, char delim) {
    for (const char c : field) {
        if (c == delim || c == '"' || c == '\n' || c == '\r') return true;
    }
    return false;
}

}  // namespace

std::optional<size_t> Table::column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

size_t Table::require_column(std::string_view name) const {
    const auto idx = column(name);
    if (!idx) throw SchemaError("missing required column '" + std::string(name) + "'");
    return *idx;
}

Table parse(std::string_view content, char delimiter) {
    Table table;
    table.delimiter = delimiter == '\0' ? detect_delimiter(content) : delimiter;

    Cursor cur{content};
    if (cur.done()) throw SchemaError("empty table: no header record");
    table.header = read_record(cur, table.delimiter);

    while (!cur.done()) {
        const size_t line = cur.line;
        auto fields = read_record(cur, table.delimiter);
        if (record_is_blank(fields)) continue;
        if (fields.size() != table.header.size()) {
            throw SchemaError("line " + std::to_string(line) + ": expected " +
                              std::to_string(table.header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.row_lines.push_back(line);
    }
    return table;
}

Table read_file(const std::string& path, char delimiter) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str(), delimiter);
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

std::string format(const Table& table) {
    std::string out;
    const auto write_record = [&](const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out.push_back(table.delimiter);
            if (needs_quotes(fields[i], table.delimiter)) {
                out.push_back('"');
                for (const char c : fields[i]) {
                    if (c == '"') out.push_back('"');
                    out.push_back(c);
                }
                out.push_back('"');
            } else {
                out += fields[i];
            }
        }
        out.push_back('\n');
    };
    write_record(table.header);
    for (const auto& row : table.rows) write_record(row);
    return out;
}

void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << format(table);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace framebench::csv
