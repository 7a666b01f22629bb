#include "framebench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "framebench/csv.hpp"
#include "framebench/errors.hpp"

namespace framebench {
namespace {

constexpr std::array<std::string_view, 6> kCodes{"AR01", "HI02", "CF03",
                                                 "MF04", "EF05", "NO06"};
constexpr std::array<std::string_view, 6> kNames{
    "Attribution of Responsibility", "Human Interest", "Conflict",
    "Morality",                      "Economic",       "No Frame",
};

std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

size_t whitespace_token_count(std::string_view text) {
    size_t count = 0;
    bool in_token = false;
    for (const unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

bool has_terminal_punctuation(std::string_view text) {
    if (text.find_first_of(".!?") != std::string_view::npos) return true;
    return text.find("\xe2\x80\xa6") != std::string_view::npos;  // ellipsis
}

int parse_paragraph_id(std::string_view field) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || value < 0) {
        throw ValidationError("paragraph_id must be a non-negative integer, got '" +
                              std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::string_view frame_code(FrameLabel label) { return kCodes[static_cast<size_t>(label)]; }
std::string_view frame_name(FrameLabel label) { return kNames[static_cast<size_t>(label)]; }

std::optional<FrameLabel> try_parse_frame_code(std::string_view code) {
    for (size_t i = 0; i < kCodes.size(); ++i) {
        if (kCodes[i] == code) return kAllFrameLabels[i];
    }
    return std::nullopt;
}

FrameLabel parse_frame_code(std::string_view code) {
    if (const auto label = try_parse_frame_code(code)) return *label;
    throw ValidationError("unknown frame code '" + std::string(code) + "'");
}

std::string_view pivot_code(Pivot pivot) { return pivot == Pivot::kDe ? "de" : "fr"; }

Pivot parse_pivot_code(std::string_view code) {
    if (code == "de") return Pivot::kDe;
    if (code == "fr") return Pivot::kFr;
    throw ValidationError("unknown pivot code '" + std::string(code) + "'");
}

std::string LabeledExample::identity() const {
    std::string id = webpage_id + ":" + std::to_string(paragraph_id);
    if (provenance == Provenance::kAugmented) {
        id += ":aug:";
        id += route ? pivot_code(*route) : "?";
        id += ":" + std::to_string(copy_index);
    }
    return id;
}

Corpus load_corpus(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    const size_t col_webpage = table.require_column("webpage_id");
    const size_t col_paragraph = table.require_column("paragraph_id");
    const size_t col_text = table.require_column("text");
    const size_t col_label = table.require_column("label");
    const auto col_provenance = table.column("provenance");
    const auto col_parent_web = table.column("parent_webpage_id");
    const auto col_parent_par = table.column("parent_paragraph_id");
    const auto col_route = table.column("route");
    const auto col_copy = table.column("copy_index");

    Corpus corpus;
    corpus.source = path;
    corpus.examples.reserve(table.rows.size());

    std::vector<std::string> problems;
    std::set<std::string> seen;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "line " + std::to_string(table.row_lines[r]);
        try {
            LabeledExample ex;
            ex.webpage_id = row[col_webpage];
            if (ex.webpage_id.empty()) throw ValidationError("webpage_id is empty");
            ex.paragraph_id = parse_paragraph_id(row[col_paragraph]);
            ex.text = row[col_text];
            if (!row[col_label].empty()) ex.label = parse_frame_code(row[col_label]);
            if (col_provenance && row[*col_provenance] == "augmented") {
                ex.provenance = Provenance::kAugmented;
                if (!col_parent_web || !col_parent_par || !col_route || !col_copy) {
                    throw ValidationError("augmented row without parent/route/copy columns");
                }
                ex.parent = ParentRef{row[*col_parent_web],
                                      parse_paragraph_id(row[*col_parent_par])};
                ex.route = parse_pivot_code(row[*col_route]);
                ex.copy_index = parse_paragraph_id(row[*col_copy]);
            }
            if (!seen.insert(ex.identity()).second) {
                throw ValidationError("duplicate identity " + ex.identity());
            }
            corpus.examples.push_back(std::move(ex));
        } catch (const ValidationError& e) {
            problems.push_back(where + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = path + ": " + std::to_string(problems.size()) + " invalid row(s)";
        const size_t shown = std::min<size_t>(problems.size(), 20);
        for (size_t i = 0; i < shown; ++i) msg += "\n  " + problems[i];
        if (shown < problems.size()) msg += "\n  ...";
        throw ValidationError(msg);
    }
    return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    const bool has_augmented =
        std::any_of(corpus.examples.begin(), corpus.examples.end(),
                    [](const auto& ex) { return ex.provenance == Provenance::kAugmented; });

    csv::Table table;
    table.header = {"webpage_id", "paragraph_id", "text", "label"};
    if (has_augmented) {
        for (const char* col : {"provenance", "parent_webpage_id", "parent_paragraph_id",
                                "route", "copy_index"}) {
            table.header.emplace_back(col);
        }
    }
    for (const auto& ex : corpus.examples) {
        std::vector<std::string> row{
            ex.webpage_id,
            std::to_string(ex.paragraph_id),
            ex.text,
            ex.label ? std::string(frame_code(*ex.label)) : std::string{},
        };
        if (has_augmented) {
            if (ex.provenance == Provenance::kAugmented) {
                row.emplace_back("augmented");
                row.push_back(ex.parent ? ex.parent->webpage_id : "");
                row.push_back(ex.parent ? std::to_string(ex.parent->paragraph_id) : "");
                row.emplace_back(ex.route ? pivot_code(*ex.route) : "");
                row.push_back(std::to_string(ex.copy_index));
            } else {
                row.insert(row.end(), {"original", "", "", "", ""});
            }
        }
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

Corpus filter_paragraphs(const Corpus& corpus, const FilterRules& rules) {
    std::vector<std::string> keywords;
    keywords.reserve(rules.drop_keywords.size());
    for (const auto& kw : rules.drop_keywords) keywords.push_back(lowercase_ascii(kw));

    Corpus out;
    out.source = corpus.source;
    out.filter_log = corpus.filter_log;

    for (const auto& ex : corpus.examples) {
        std::string reason;
        if (is_blank(ex.text)) {
            reason = "blank";
        } else {
            const std::string haystack = lowercase_ascii(ex.text);
            for (size_t i = 0; i < keywords.size() && reason.empty(); ++i) {
                if (!keywords[i].empty() && haystack.find(keywords[i]) != std::string::npos) {
                    reason = "keyword:" + rules.drop_keywords[i];
                }
            }
            if (reason.empty()) {
                const bool enough_tokens = whitespace_token_count(ex.text) >= rules.min_tokens;
                const bool punctuated =
                    !rules.require_terminal_punctuation || has_terminal_punctuation(ex.text);
                if (!enough_tokens || !punctuated) reason = "incomplete_sentence";
            }
        }
        if (reason.empty()) {
            out.examples.push_back(ex);
        } else {
            out.filter_log.push_back({ex.webpage_id, ex.paragraph_id, reason});
        }
    }
    return out;
}

std::map<FrameLabel, size_t> label_distribution(const Corpus& corpus) {
    std::map<FrameLabel, size_t> counts;
    for (const FrameLabel label : kAllFrameLabels) counts[label] = 0;
    for (const auto& ex : corpus.examples) {
        if (!ex.label) {
            throw ValidationError("unlabeled example " + ex.identity() +
                                  " in label_distribution");
        }
        ++counts[*ex.label];
    }
    return counts;
}

Corpus select_frame_subset(const Corpus& corpus, const std::vector<FrameLabel>& excluded) {
    Corpus out;
    out.source = corpus.source;
    out.filter_log = corpus.filter_log;
    for (const auto& ex : corpus.examples) {
        const bool drop = ex.label && std::find(excluded.begin(), excluded.end(), *ex.label) !=
                                          excluded.end();
        if (!drop) out.examples.push_back(ex);
    }
    return out;
}

void write_filter_log(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& rec : corpus.filter_log) {
        const nlohmann::json j{{"webpage_id", rec.webpage_id},
                               {"paragraph_id", rec.paragraph_id},
                               {"reason", rec.reason}};
        out << j.dump() << "\n";
    }
}

}  // namespace framebench
