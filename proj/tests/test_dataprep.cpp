#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "framebench/dataprep.hpp"
#include "framebench/errors.hpp"
#include "testutil.hpp"

using namespace framebench;
using namespace framebench::testutil;

namespace {

std::set<std::string> ids(const Corpus& c) {
    std::set<std::string> out;
    for (const auto& ex : c.examples) out.insert(ex.identity());
    return out;
}

}  // namespace

TEST_CASE("stratified split of the four-frame subset hits the reference counts") {
    const Corpus subset = corpus_with_counts({{FrameLabel::AR01, 226},
                                              {FrameLabel::HI02, 32},
                                              {FrameLabel::CF03, 124},
                                              {FrameLabel::EF05, 542}});
    const DatasetSplit split = stratified_split(subset, 0.2, 42);
    CHECK(split.train.size() == 739);
    CHECK(split.test.size() == 185);

    const auto train_dist = label_distribution(split.train);
    const auto test_dist = label_distribution(split.test);
    const std::map<FrameLabel, size_t> want_train{{FrameLabel::AR01, 180},
                                                  {FrameLabel::HI02, 26},
                                                  {FrameLabel::CF03, 99},
                                                  {FrameLabel::EF05, 434}};
    const std::map<FrameLabel, size_t> want_test{{FrameLabel::AR01, 46},
                                                 {FrameLabel::HI02, 6},
                                                 {FrameLabel::CF03, 25},
                                                 {FrameLabel::EF05, 108}};
    for (const auto& [label, want] : want_train) {
        CHECK(std::abs(int64_t(train_dist.at(label)) - int64_t(want)) <= 1);
    }
    for (const auto& [label, want] : want_test) {
        CHECK(std::abs(int64_t(test_dist.at(label)) - int64_t(want)) <= 1);
    }

    // Disjoint and exhaustive.
    const auto train_ids = ids(split.train);
    const auto test_ids = ids(split.test);
    CHECK(train_ids.size() + test_ids.size() == subset.size());
    for (const auto& id : test_ids) CHECK(!train_ids.count(id));
}

TEST_CASE("split handles the simple proportions directly") {
    const Corpus ten = corpus_with_counts({{FrameLabel::AR01, 10}});
    const DatasetSplit s1 = stratified_split(ten, 0.2, 7);
    CHECK(s1.train.size() == 8);
    CHECK(s1.test.size() == 2);

    const Corpus even = corpus_with_counts({{FrameLabel::AR01, 50}, {FrameLabel::EF05, 50}});
    const DatasetSplit s2 = stratified_split(even, 0.2, 7);
    const auto dist = label_distribution(s2.test);
    CHECK(dist.at(FrameLabel::AR01) == 10);
    CHECK(dist.at(FrameLabel::EF05) == 10);
}

TEST_CASE("split is deterministic per seed and membership-only across seeds") {
    const Corpus subset = corpus_with_counts(
        {{FrameLabel::AR01, 37}, {FrameLabel::CF03, 21}, {FrameLabel::EF05, 64}});
    const DatasetSplit a = stratified_split(subset, 0.25, 9);
    const DatasetSplit b = stratified_split(subset, 0.25, 9);
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(a.test) == ids(b.test));

    const DatasetSplit c = stratified_split(subset, 0.25, 10);
    CHECK(label_distribution(c.test) == label_distribution(a.test));
    CHECK(ids(c.test) != ids(a.test));
}

TEST_CASE("split rejects unstratifiable input") {
    const Corpus tiny = corpus_with_counts({{FrameLabel::AR01, 1}, {FrameLabel::EF05, 30}});
    CHECK_THROWS_AS(stratified_split(tiny, 0.2, 1), ValidationError);

    Corpus unlabeled = corpus_with_counts({{FrameLabel::AR01, 5}});
    unlabeled.examples.push_back(make_example("u", 99, "No label here.", std::nullopt));
    CHECK_THROWS_AS(stratified_split(unlabeled, 0.2, 1), ValidationError);

    const Corpus ok = corpus_with_counts({{FrameLabel::AR01, 5}});
    CHECK_THROWS_AS(stratified_split(ok, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(stratified_split(ok, 1.0, 1), ValidationError);
    CHECK_THROWS_AS(stratified_split(Corpus{}, 0.2, 1), ValidationError);
}

TEST_CASE("largest-remainder totals hold on random class maps") {
    Rng rng(55);
    for (int iter = 0; iter < 50; ++iter) {
        std::map<FrameLabel, size_t> counts;
        const std::vector<FrameLabel> classes{FrameLabel::AR01, FrameLabel::HI02,
                                              FrameLabel::CF03, FrameLabel::EF05};
        size_t total = 0;
        for (const FrameLabel label : classes) {
            const size_t n = 2 + rng.next_below(300);
            counts[label] = n;
            total += n;
        }
        const double fraction = rng.next_uniform(0.05, 0.5);
        const auto alloc = test_allocation(counts, fraction);
        size_t test_total = 0;
        for (const auto& [label, k] : alloc) {
            test_total += k;
            const double quota = fraction * static_cast<double>(counts.at(label));
            CHECK(std::fabs(static_cast<double>(k) - quota) <= 1.0 + 1e-9);
            CHECK(k < counts.at(label));  // train keeps at least one row
        }
        const auto want_total =
            static_cast<size_t>(std::llround(fraction * static_cast<double>(total)));
        // Equality can only be waived when the per-class cap bit.
        CHECK(test_total <= want_total);
        CHECK(want_total - test_total <= classes.size());
        if (fraction < 0.45) CHECK(test_total == want_total);
    }
}

TEST_CASE("split manifest round-trips and replays bit-exactly") {
    ScopedTempDir dir("manifest");
    const Corpus subset = corpus_with_counts(
        {{FrameLabel::AR01, 23}, {FrameLabel::CF03, 17}, {FrameLabel::EF05, 40}});
    const DatasetSplit split = stratified_split(subset, 0.2, 1234);
    const auto path = dir.file("split.json");
    write_split_manifest(path, split);

    const DatasetSplit replay = split_from_manifest(path, subset);
    CHECK(replay.seed == split.seed);
    CHECK(replay.test_fraction == split.test_fraction);
    REQUIRE(replay.train.size() == split.train.size());
    for (size_t i = 0; i < replay.train.size(); ++i) {
        CHECK(replay.train.examples[i].identity() == split.train.examples[i].identity());
    }
    REQUIRE(replay.test.size() == split.test.size());
    for (size_t i = 0; i < replay.test.size(); ++i) {
        CHECK(replay.test.examples[i].identity() == split.test.examples[i].identity());
    }

    Corpus stranger = subset;
    stranger.examples.push_back(make_example("zz", 0, "Not in the manifest.", FrameLabel::AR01));
    CHECK_THROWS_AS(split_from_manifest(path, stranger), ValidationError);
}

TEST_CASE("class weights reproduce the documented reference values") {
    const auto w = compute_class_weights({{FrameLabel::AR01, 250},
                                          {FrameLabel::HI02, 250},
                                          {FrameLabel::CF03, 250},
                                          {FrameLabel::EF05, 434}});
    CHECK(std::fabs(w.at(FrameLabel::AR01) - 1.184) <= 0.0005);
    CHECK(std::fabs(w.at(FrameLabel::HI02) - 1.184) <= 0.0005);
    CHECK(std::fabs(w.at(FrameLabel::CF03) - 1.184) <= 0.0005);
    CHECK(std::fabs(w.at(FrameLabel::EF05) - 0.682) <= 0.0005);
}

TEST_CASE("class weights on balanced and hand-computed maps") {
    const auto balanced =
        compute_class_weights({{FrameLabel::AR01, 100}, {FrameLabel::EF05, 100}});
    CHECK(balanced.at(FrameLabel::AR01) == doctest::Approx(1.0));
    CHECK(balanced.at(FrameLabel::EF05) == doctest::Approx(1.0));

    const auto uneven = compute_class_weights({{FrameLabel::AR01, 10}, {FrameLabel::EF05, 30}});
    CHECK(uneven.at(FrameLabel::AR01) == doctest::Approx(2.0));
    CHECK(uneven.at(FrameLabel::EF05) == doctest::Approx(0.6667).epsilon(1e-4));

    CHECK_THROWS_AS(compute_class_weights({{FrameLabel::AR01, 0}, {FrameLabel::EF05, 5}}),
                    ValidationError);
    CHECK_THROWS_AS(compute_class_weights({}), ValidationError);
}

TEST_CASE("class weight invariants hold on random count maps") {
    Rng rng(77);
    const std::vector<FrameLabel> classes{FrameLabel::AR01, FrameLabel::HI02, FrameLabel::CF03,
                                          FrameLabel::MF04, FrameLabel::EF05};
    for (int iter = 0; iter < 50; ++iter) {
        std::map<FrameLabel, size_t> counts;
        const size_t k = 2 + rng.next_below(classes.size() - 1);
        for (size_t i = 0; i < k; ++i) counts[classes[i]] = 1 + rng.next_below(500);
        const auto w = compute_class_weights(counts);

        double weighted_mass = 0.0;
        double total = 0.0;
        for (const auto& [label, n] : counts) {
            weighted_mass += static_cast<double>(n) * w.at(label);
            total += static_cast<double>(n);
        }
        CHECK(weighted_mass == doctest::Approx(total).epsilon(1e-9));

        for (const auto& [a, na] : counts) {
            for (const auto& [b, nb] : counts) {
                if (na < nb) CHECK(w.at(a) > w.at(b));
            }
        }
    }
}
