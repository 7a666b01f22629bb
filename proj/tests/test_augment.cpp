#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>

#include "framebench/augment.hpp"
#include "framebench/errors.hpp"
#include "testutil.hpp"

using namespace framebench;
using namespace framebench::testutil;

namespace {

// Fails every EN->DE hop; FR works.
class FailDeTranslator final : public TranslatorClient {
public:
    std::vector<Pivot> supported_pivots() const override { return {Pivot::kFr}; }
    std::string translate(const std::string& text, Lang from, Lang to) override {
        if (to == Lang::kDe || from == Lang::kDe) {
            throw TranslationError("pivot unavailable", from, to);
        }
        return text;
    }
};

// Fails the first `failures` calls, then behaves as identity.
class FlakyTranslator final : public TranslatorClient {
public:
    explicit FlakyTranslator(int failures) : remaining_(failures) {}
    std::vector<Pivot> supported_pivots() const override { return {Pivot::kDe, Pivot::kFr}; }
    std::string translate(const std::string& text, Lang from, Lang to) override {
        if (remaining_-- > 0) throw TranslationError("transient", from, to);
        return text;
    }
    std::atomic<int> remaining_;
};

const std::map<FrameLabel, size_t>& paper_shape_counts() {
    static const auto counts = reference_train_counts();
    return counts;
}

}  // namespace

TEST_CASE("plan inflates deficient classes to the target and spares the largest") {
    const auto plan = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 42);
    const auto per_class = plan.assignments_per_class();
    CHECK(per_class.at(FrameLabel::AR01) == 70);
    CHECK(per_class.at(FrameLabel::HI02) == 224);
    CHECK(per_class.at(FrameLabel::CF03) == 151);
    CHECK(per_class.at(FrameLabel::EF05) == 0);
    CHECK(plan.assignments.size() == 445);

    size_t grand_total = 0;
    for (const auto& [label, n] : paper_shape_counts()) {
        grand_total += std::max(n, plan.targets.at(label));
    }
    CHECK(grand_total == 1184);
}

TEST_CASE("heavy inflation reuses (source, route) pairs with higher copy indices") {
    const auto plan = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 42);
    int max_copy_hi02 = 0;
    for (const auto& a : plan.assignments) {
        if (a.label == FrameLabel::HI02) max_copy_hi02 = std::max(max_copy_hi02, a.copy_index);
        CHECK(a.copy_index >= 1);
        CHECK(a.source_ordinal < paper_shape_counts().at(a.label));
    }
    // 224 copies from 26 sources x 2 routes forces reuse.
    CHECK(max_copy_hi02 >= 2);
}

TEST_CASE("per-source routes alternate de, fr, de with stepped copy indices") {
    const auto plan =
        plan_augmentation({{FrameLabel::AR01, 2}, {FrameLabel::EF05, 100}},
                          TargetRule::fixed(9), 3);
    std::map<size_t, std::vector<Assignment>> by_source;
    for (const auto& a : plan.assignments) {
        REQUIRE(a.label == FrameLabel::AR01);
        by_source[a.source_ordinal].push_back(a);
    }
    REQUIRE(by_source.size() == 2);
    for (const auto& [ordinal, seq] : by_source) {
        for (size_t k = 0; k < seq.size(); ++k) {
            CHECK(seq[k].route == (k % 2 == 0 ? Pivot::kDe : Pivot::kFr));
            CHECK(seq[k].copy_index == static_cast<int>(k / 2) + 1);
        }
    }
}

TEST_CASE("plan edge cases") {
    // Already above target: nothing to do.
    const auto over = plan_augmentation({{FrameLabel::AR01, 300}, {FrameLabel::EF05, 400}},
                                        TargetRule::fixed(250), 1);
    CHECK(over.assignments.empty());

    // Half-of-largest rule.
    const auto half = plan_augmentation({{FrameLabel::AR01, 10}, {FrameLabel::EF05, 100}},
                                        TargetRule::half_of_largest(), 1);
    CHECK(half.targets.at(FrameLabel::AR01) == 50);
    CHECK(half.assignments_per_class().at(FrameLabel::AR01) == 40);
    CHECK(half.assignments_per_class().at(FrameLabel::EF05) == 0);

    CHECK_THROWS_AS(plan_augmentation({{FrameLabel::AR01, 0}}, TargetRule::fixed(250), 1),
                    ValidationError);
    CHECK_THROWS_AS(plan_augmentation({}, TargetRule::fixed(250), 1), ValidationError);
}

TEST_CASE("plans are deterministic per seed") {
    const auto a = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 42);
    const auto b = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 42);
    CHECK(a.assignments == b.assignments);
    const auto c = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 43);
    CHECK(a.assignments != c.assignments);
    CHECK(a.assignments_per_class() == c.assignments_per_class());
}

TEST_CASE("plan json round-trip") {
    ScopedTempDir dir("plan");
    const auto plan = plan_augmentation({{FrameLabel::AR01, 5}, {FrameLabel::EF05, 9}},
                                        TargetRule::fixed(8), 17);
    const auto path = dir.file("plan.json");
    write_plan(path, plan);
    const auto back = read_plan(path);
    CHECK(back.seed == plan.seed);
    CHECK(back.targets == plan.targets);
    CHECK(back.original_counts == plan.original_counts);
    CHECK(back.assignments == plan.assignments);
}

TEST_CASE("back_translate composes the two hops") {
    const auto identity = make_identity_translator();
    CHECK(back_translate("Some text.", Pivot::kDe, *identity) == "Some text.");

    const auto marker = make_marker_translator();
    CHECK(back_translate("Some text.", Pivot::kFr, *marker) == "Some text.");
    // A direct single hop shows the pivot form is marked.
    CHECK(marker->translate("abc", Lang::kEn, Lang::kDe) == "[de] abc");

    FailDeTranslator faulty;
    try {
        back_translate("Some text.", Pivot::kDe, faulty);
        FAIL("expected TranslationError");
    } catch (const TranslationError& e) {
        CHECK(e.to() == Lang::kDe);
    }
    CHECK(back_translate("Some text.", Pivot::kFr, faulty) == "Some text.");

    CHECK_THROWS_AS(back_translate("", Pivot::kDe, *identity), TranslationError);
}

TEST_CASE("back_translate retries transient failures") {
    FlakyTranslator flaky(2);
    CHECK(back_translate("Some text.", Pivot::kDe, flaky, 2) == "Some text.");
    FlakyTranslator too_flaky(10);
    CHECK_THROWS_AS(back_translate("Some text.", Pivot::kDe, too_flaky, 2), TranslationError);
}

TEST_CASE("augment_dataset reaches the target counts on the reference shape") {
    const Corpus train = corpus_with_counts(paper_shape_counts());
    const auto plan = plan_augmentation(paper_shape_counts(), TargetRule::fixed(250), 42);
    const auto marker = make_marker_translator();
    const Corpus augmented = augment_dataset(train, plan, *marker);

    CHECK(augmented.size() == 1184);
    const auto dist = label_distribution(augmented);
    CHECK(dist.at(FrameLabel::AR01) == 250);
    CHECK(dist.at(FrameLabel::HI02) == 250);
    CHECK(dist.at(FrameLabel::CF03) == 250);
    CHECK(dist.at(FrameLabel::EF05) == 434);

    // Originals unchanged, in order, at the front.
    for (size_t i = 0; i < train.size(); ++i) {
        CHECK(augmented.examples[i].identity() == train.examples[i].identity());
        CHECK(augmented.examples[i].text == train.examples[i].text);
    }
    for (size_t i = train.size(); i < augmented.size(); ++i) {
        const auto& ex = augmented.examples[i];
        CHECK(ex.provenance == Provenance::kAugmented);
        REQUIRE(ex.parent.has_value());
        CHECK(ex.webpage_id == ex.parent->webpage_id);
    }
}

TEST_CASE("augment_dataset identity cases") {
    const Corpus train = corpus_with_counts({{FrameLabel::AR01, 4}, {FrameLabel::EF05, 6}});
    AugmentationPlan empty_plan;
    empty_plan.original_counts = label_distribution(train);
    const auto identity = make_identity_translator();
    CHECK(augment_dataset(train, empty_plan, *identity).size() == train.size());

    AugmentationPlan one = empty_plan;
    one.assignments.push_back({FrameLabel::AR01, 2, Pivot::kDe, 1});
    const Corpus out = augment_dataset(train, one, *identity);
    REQUIRE(out.size() == train.size() + 1);
    const auto& added = out.examples.back();
    const auto& parent = train.examples[2];  // third AR01 row in corpus order
    CHECK(added.text == parent.text);
    CHECK(added.label == parent.label);
    CHECK(added.parent == ParentRef{parent.webpage_id, parent.paragraph_id});
    CHECK(added.route == Pivot::kDe);
    CHECK(added.copy_index == 1);
}

TEST_CASE("augmented labels always equal their parents' labels on random plans") {
    Rng rng(91);
    for (int iter = 0; iter < 10; ++iter) {
        std::map<FrameLabel, size_t> counts{
            {FrameLabel::AR01, 2 + rng.next_below(20)},
            {FrameLabel::CF03, 2 + rng.next_below(20)},
            {FrameLabel::EF05, 25 + rng.next_below(20)},
        };
        const Corpus train = corpus_with_counts(counts);
        const auto plan =
            plan_augmentation(counts, TargetRule::fixed(10 + rng.next_below(30)), iter);
        const auto marker = make_marker_translator();
        const Corpus out = augment_dataset(train, plan, *marker);

        for (const auto& [label, n] : counts) {
            CHECK(label_distribution(out).at(label) == std::max(n, plan.targets.at(label)));
        }
        std::map<std::string, FrameLabel> parent_labels;
        for (const auto& ex : train.examples) parent_labels[ex.identity()] = *ex.label;
        for (const auto& ex : out.examples) {
            if (ex.provenance != Provenance::kAugmented) continue;
            const auto key = ex.parent->webpage_id + ":" + std::to_string(ex.parent->paragraph_id);
            CHECK(parent_labels.at(key) == *ex.label);
        }
    }
}

TEST_CASE("augment_dataset validates the plan against the corpus") {
    const Corpus train = corpus_with_counts({{FrameLabel::AR01, 4}, {FrameLabel::EF05, 6}});
    const auto plan = plan_augmentation({{FrameLabel::AR01, 5}, {FrameLabel::EF05, 6}},
                                        TargetRule::fixed(6), 1);
    const auto identity = make_identity_translator();
    CHECK_THROWS_AS(augment_dataset(train, plan, *identity), ValidationError);
}

TEST_CASE("a failed assignment aborts with progress information") {
    const std::map<FrameLabel, size_t> counts{{FrameLabel::AR01, 3}, {FrameLabel::EF05, 8}};
    const Corpus train = corpus_with_counts(counts);
    const auto plan = plan_augmentation(counts, TargetRule::fixed(6), 5);
    FailDeTranslator faulty;
    try {
        augment_dataset(train, plan, faulty, {.max_in_flight = 1, .max_retries = 0});
        FAIL("expected AugmentationError");
    } catch (const AugmentationError& e) {
        CHECK(e.failed_assignment_index() == 0);  // first assignment routes via de
        CHECK(std::string(e.what()).find("de") != std::string::npos);
    }
}

TEST_CASE("concurrent execution commits in plan order") {
    std::map<FrameLabel, size_t> counts{{FrameLabel::AR01, 5},
                                        {FrameLabel::CF03, 7},
                                        {FrameLabel::EF05, 40}};
    const Corpus train = corpus_with_counts(counts);
    const auto plan = plan_augmentation(counts, TargetRule::fixed(30), 8);
    const auto marker = make_marker_translator();
    const Corpus sequential = augment_dataset(train, plan, *marker, {.max_in_flight = 1});
    const Corpus concurrent = augment_dataset(train, plan, *marker, {.max_in_flight = 6});
    REQUIRE(sequential.size() == concurrent.size());
    for (size_t i = 0; i < sequential.size(); ++i) {
        CHECK(sequential.examples[i].identity() == concurrent.examples[i].identity());
        CHECK(sequential.examples[i].text == concurrent.examples[i].text);
    }
}
