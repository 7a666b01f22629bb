#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framebench {

// The six codebook classes: five generic news frames plus the residual
// No Frame class. The numeric order here is the canonical label order used
// everywhere a deterministic ordering is needed.
enum class FrameLabel : uint8_t { AR01, HI02, CF03, MF04, EF05, NO06 };

inline constexpr std::array<FrameLabel, 6> kAllFrameLabels{
    FrameLabel::AR01, FrameLabel::HI02, FrameLabel::CF03,
    FrameLabel::MF04, FrameLabel::EF05, FrameLabel::NO06,
};

std::string_view frame_code(FrameLabel label);        // "AR01"
std::string_view frame_name(FrameLabel label);        // "Attribution of Responsibility"
FrameLabel parse_frame_code(std::string_view code);   // throws ValidationError
std::optional<FrameLabel> try_parse_frame_code(std::string_view code);

enum class Provenance : uint8_t { kOriginal, kAugmented };

enum class Pivot : uint8_t { kDe, kFr };
std::string_view pivot_code(Pivot pivot);  // "de" / "fr"
Pivot parse_pivot_code(std::string_view code);

struct ParentRef {
    std::string webpage_id;
    int paragraph_id = 0;
    bool operator==(const ParentRef&) const = default;
};

// One paragraph of one webpage; the atomic coding unit.
struct LabeledExample {
    std::string webpage_id;
    int paragraph_id = 0;
    std::string text;
    std::optional<FrameLabel> label;
    Provenance provenance = Provenance::kOriginal;
    // Augmented rows carry their source row, its pivot route, and a 1-based
    // copy index that disambiguates repeated (source, route) pairs.
    std::optional<ParentRef> parent;
    std::optional<Pivot> route;
    int copy_index = 0;

    std::string identity() const;
};

struct FilterRecord {
    std::string webpage_id;
    int paragraph_id = 0;
    std::string reason;
};

struct Corpus {
    std::vector<LabeledExample> examples;
    std::string source;
    std::vector<FilterRecord> filter_log;

    size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

struct FilterRules {
    std::vector<std::string> drop_keywords{"cookie"};
    // A text counts as a complete sentence when it has at least
    // `min_tokens` whitespace-separated tokens and ends in (or contains)
    // terminal punctuation.
    size_t min_tokens = 4;
    bool require_terminal_punctuation = true;
};

// Reads a delimited table (comma or tab, autodetected) with columns
// webpage_id, paragraph_id, text, label. The optional augmentation columns
// provenance, parent_webpage_id, parent_paragraph_id, route, copy_index are
// reconstructed when present. Malformed rows are collected and reported
// together with their line numbers.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);

Corpus filter_paragraphs(const Corpus& corpus, const FilterRules& rules);

// Requires every example to be labeled; counts include zero entries for
// absent classes so totals are well-defined over the full label set.
std::map<FrameLabel, size_t> label_distribution(const Corpus& corpus);

Corpus select_frame_subset(const Corpus& corpus, const std::vector<FrameLabel>& excluded);

// JSON-lines filter log, one record per dropped row.
void write_filter_log(const std::string& path, const Corpus& corpus);

}  // namespace framebench
