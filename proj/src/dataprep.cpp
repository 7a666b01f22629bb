#include "framebench/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "framebench/errors.hpp"
#include "framebench/rng.hpp"

namespace framebench {
namespace {

// Quota floors can sit a hair under an exact integer after the double
// multiply; nudge before flooring so 0.2 * 25 floors to 5, not 4.
size_t quota_floor(double q) { return static_cast<size_t>(std::floor(q + 1e-9)); }

}  // namespace

ClassWeights compute_class_weights(const std::map<FrameLabel, size_t>& counts) {
    if (counts.empty()) throw ValidationError("compute_class_weights: no classes");
    size_t total = 0;
    for (const auto& [label, n] : counts) {
        if (n == 0) {
            throw ValidationError("compute_class_weights: class " +
                                  std::string(frame_code(label)) + " has zero count");
        }
        total += n;
    }
    const double k = static_cast<double>(counts.size());
    ClassWeights weights;
    for (const auto& [label, n] : counts) {
        weights[label] = static_cast<double>(total) / (k * static_cast<double>(n));
    }
    return weights;
}

std::map<FrameLabel, size_t> test_allocation(const std::map<FrameLabel, size_t>& counts,
                                             double test_fraction) {
    size_t total = 0;
    for (const auto& [label, n] : counts) total += n;
    const auto seats =
        static_cast<size_t>(std::llround(test_fraction * static_cast<double>(total)));

    std::map<FrameLabel, size_t> alloc;
    struct Candidate {
        double remainder;
        size_t count;
        FrameLabel label;
    };
    std::vector<Candidate> candidates;
    size_t assigned = 0;
    for (const auto& [label, n] : counts) {
        const double quota = test_fraction * static_cast<double>(n);
        const size_t base = quota_floor(quota);
        alloc[label] = base;
        assigned += base;
        candidates.push_back({quota - static_cast<double>(base), n, label});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        if (a.count != b.count) return a.count > b.count;
        return a.label < b.label;
    });
    size_t extras = seats > assigned ? seats - assigned : 0;
    for (size_t pass = 0; extras > 0; ++pass) {
        bool progressed = false;
        for (const auto& c : candidates) {
            if (extras == 0) break;
            // Never put a whole class in the test split.
            if (alloc[c.label] + 1 >= c.count) continue;
            ++alloc[c.label];
            --extras;
            progressed = true;
        }
        if (!progressed) break;
    }
    return alloc;
}

DatasetSplit stratified_split(const Corpus& corpus, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test_fraction must be in (0, 1)");
    }

    std::map<FrameLabel, std::vector<size_t>> by_class;
    for (size_t i = 0; i < corpus.examples.size(); ++i) {
        const auto& ex = corpus.examples[i];
        if (!ex.label) {
            throw ValidationError("stratified_split: unlabeled example " + ex.identity());
        }
        by_class[*ex.label].push_back(i);
    }
    if (by_class.empty()) throw ValidationError("stratified_split: empty corpus");

    std::map<FrameLabel, size_t> counts;
    for (const auto& [label, members] : by_class) {
        if (members.size() < 2) {
            throw ValidationError("stratified_split: class " + std::string(frame_code(label)) +
                                  " has fewer than 2 members");
        }
        counts[label] = members.size();
    }

    const auto alloc = test_allocation(counts, test_fraction);

    std::vector<bool> in_test(corpus.examples.size(), false);
    for (auto& [label, members] : by_class) {
        Rng rng(derive_seed(seed, frame_code(label)));
        rng.shuffle(members);
        const size_t take = alloc.at(label);
        for (size_t i = 0; i < take; ++i) in_test[members[i]] = true;
    }

    DatasetSplit split;
    split.seed = seed;
    split.test_fraction = test_fraction;
    split.train.source = corpus.source;
    split.test.source = corpus.source;
    for (size_t i = 0; i < corpus.examples.size(); ++i) {
        (in_test[i] ? split.test : split.train).examples.push_back(corpus.examples[i]);
    }
    return split;
}

void write_split_manifest(const std::string& path, const DatasetSplit& split) {
    nlohmann::json j;
    j["seed"] = split.seed;
    j["fraction"] = split.test_fraction;
    auto ids = [](const Corpus& c) {
        std::vector<std::string> out;
        out.reserve(c.size());
        for (const auto& ex : c.examples) out.push_back(ex.identity());
        return out;
    };
    j["train_ids"] = ids(split.train);
    j["test_ids"] = ids(split.test);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

DatasetSplit split_from_manifest(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": invalid split manifest: " + e.what());
    }

    DatasetSplit split;
    split.seed = j.value("seed", uint64_t{0});
    split.test_fraction = j.value("fraction", 0.2);
    split.train.source = corpus.source;
    split.test.source = corpus.source;

    const std::set<std::string> test_ids(j.at("test_ids").begin(), j.at("test_ids").end());
    const std::set<std::string> train_ids(j.at("train_ids").begin(), j.at("train_ids").end());
    for (const auto& ex : corpus.examples) {
        const std::string id = ex.identity();
        if (test_ids.count(id)) {
            split.test.examples.push_back(ex);
        } else if (train_ids.count(id)) {
            split.train.examples.push_back(ex);
        } else {
            throw ValidationError("split manifest does not mention example " + id);
        }
    }
    if (split.train.size() != train_ids.size() || split.test.size() != test_ids.size()) {
        throw ValidationError("split manifest mentions examples missing from the corpus");
    }
    return split;
}

}  // namespace framebench
