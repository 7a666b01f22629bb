#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "framebench/corpus.hpp"
#include "framebench/translate.hpp"

namespace framebench {

// Per-class augmentation target. Classes tied for the largest count are
// exempt and keep their size.
struct TargetRule {
    enum class Kind { kFixedTarget, kHalfOfLargest };
    Kind kind = Kind::kFixedTarget;
    size_t fixed_target = 250;

    static TargetRule fixed(size_t target) { return {Kind::kFixedTarget, target}; }
    static TargetRule half_of_largest() { return {Kind::kHalfOfLargest, 0}; }
};

// One back-translation job: the source is addressed by its ordinal within
// its class (position in corpus order), so plans derive from counts alone.
// copy_index is 1-based and increments each time a (source, route) pair
// repeats.
struct Assignment {
    FrameLabel label;
    size_t source_ordinal = 0;
    Pivot route = Pivot::kDe;
    int copy_index = 1;

    bool operator==(const Assignment&) const = default;
};

struct AugmentationPlan {
    uint64_t seed = 0;
    std::map<FrameLabel, size_t> original_counts;
    std::map<FrameLabel, size_t> targets;  // effective target = max(count, target)
    std::vector<Assignment> assignments;

    std::map<FrameLabel, size_t> assignments_per_class() const;
};

// Deterministic given (counts, rule, seed): each deficient class cycles a
// seed-shuffled source order round-robin, alternating routes de, fr, de, ...
// per source.
AugmentationPlan plan_augmentation(const std::map<FrameLabel, size_t>& train_counts,
                                   const TargetRule& rule, uint64_t seed);

void write_plan(const std::string& path, const AugmentationPlan& plan);
AugmentationPlan read_plan(const std::string& path);

// source -> pivot -> source, with bounded retries per hop.
std::string back_translate(const std::string& text, Pivot route, TranslatorClient& client,
                           int max_retries = 2);

struct AugmentOptions {
    int max_in_flight = 1;  // >1 issues translator calls concurrently
    int max_retries = 2;
};

// Reports how far a failed run got; the plan and this count make the run
// resumable.
class AugmentationError : public Error {
public:
    AugmentationError(const std::string& msg, size_t completed, size_t failed_index)
        : Error(msg), completed_(completed), failed_index_(failed_index) {}
    size_t completed() const { return completed_; }
    size_t failed_assignment_index() const { return failed_index_; }

private:
    size_t completed_;
    size_t failed_index_;
};

// Originals pass through unchanged (same order); one augmented example is
// appended per assignment, committed in plan order regardless of translator
// concurrency.
Corpus augment_dataset(const Corpus& train, const AugmentationPlan& plan,
                       TranslatorClient& client, const AugmentOptions& options = {});

}  // namespace framebench
