#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "framebench/corpus.hpp"

namespace framebench {

struct DatasetSplit {
    Corpus train;
    Corpus test;
    uint64_t seed = 0;
    double test_fraction = 0.2;
};

// Inverse-frequency loss multipliers: weight(c) = N / (K * n_c) over the
// classes present in `counts`.
using ClassWeights = std::map<FrameLabel, double>;

ClassWeights compute_class_weights(const std::map<FrameLabel, size_t>& counts);

// Deterministic stratified split. Per-class test counts come from a
// largest-remainder allocation of test_fraction * N seats (quota floor, then
// one extra seat per class in decreasing-remainder order, ties broken by
// larger class then label order), so the train/test totals are exact and
// every class lands within one row of its proportional share. Membership
// within a class is a seed-driven shuffle; both outputs preserve the input
// corpus order.
DatasetSplit stratified_split(const Corpus& corpus, double test_fraction, uint64_t seed);

// Largest-remainder test-side allocation, exposed for tests and manifests.
std::map<FrameLabel, size_t> test_allocation(const std::map<FrameLabel, size_t>& counts,
                                             double test_fraction);

// Replayable split manifest: {seed, fraction, train_ids, test_ids}.
void write_split_manifest(const std::string& path, const DatasetSplit& split);
DatasetSplit split_from_manifest(const std::string& path, const Corpus& corpus);

}  // namespace framebench
