#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "framebench/errors.hpp"
#include "framebench/metrics.hpp"
#include "testutil.hpp"

using namespace framebench;
using namespace framebench::testutil;

TEST_CASE("confusion counts gold/prediction pairs") {
    const auto m = confusion({"A", "A", "B"}, {"A", "B", "B"}, {"A", "B"});
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.total() == 3);
    CHECK(m.row_sum(0) == 2);
    CHECK(m.col_sum(1) == 2);

    const auto diag = confusion({"A", "B", "B"}, {"A", "B", "B"}, {"A", "B"});
    CHECK(diag.trace() == 3);

    const auto empty = confusion(std::vector<std::string>{}, {}, {"A", "B"});
    CHECK(empty.total() == 0);

    CHECK_THROWS_AS(confusion({"A"}, {"A", "B"}, {"A", "B"}), ValidationError);
    CHECK_THROWS_AS(confusion({"C"}, {"A"}, {"A", "B"}), ValidationError);
}

TEST_CASE("per-class metrics on the worked two-class example") {
    const auto m = confusion({"A", "A", "B"}, {"A", "B", "B"}, {"A", "B"});
    const auto a = precision_recall_f1(m, 0);
    CHECK(a.precision == doctest::Approx(1.0));
    CHECK(a.recall == doctest::Approx(0.5));
    CHECK(a.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(a.support == 2);
    CHECK(accuracy(m) == doctest::Approx(2.0 / 3.0));

    const auto perfect = confusion({"A", "B"}, {"A", "B"}, {"A", "B"});
    const auto p = precision_recall_f1(perfect, 0);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);
    CHECK(macro_f1(perfect) == 1.0);
    CHECK(accuracy(perfect) == 1.0);
}

TEST_CASE("zero-denominator conventions yield zeros") {
    // Class C never gold and never predicted.
    const auto m = confusion({"A", "B"}, {"A", "B"}, {"A", "B", "C"});
    const auto c = precision_recall_f1(m, 2);
    CHECK(c.precision == 0.0);
    CHECK(c.recall == 0.0);
    CHECK(c.f1 == 0.0);
    CHECK(c.support == 0);
    // Macro-F1 averages over all classes in the label order, zeros included.
    CHECK(macro_f1(m) == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS_AS(accuracy(confusion(std::vector<std::string>{}, {}, {"A"})), ValidationError);
}

TEST_CASE("per-class table rows average to their reported macro scores") {
    // Best-run per-class F1 table and the matching macro column.
    const std::vector<std::pair<std::vector<double>, double>> rows{
        {{0.61, 0.67, 0.78, 0.81}, 0.72},  // distilbert
        {{0.65, 0.72, 0.76, 0.84}, 0.75},  // bert
        {{0.60, 0.55, 0.79, 0.84}, 0.70},  // roberta
        {{0.66, 0.62, 0.75, 0.85}, 0.72},  // deberta
        {{0.57, 0.60, 0.82, 0.82}, 0.70},  // albert
    };
    for (const auto& [f1s, macro] : rows) {
        const double mean =
            (f1s[0] + f1s[1] + f1s[2] + f1s[3]) / static_cast<double>(f1s.size());
        CHECK(std::fabs(mean - macro) <= 0.01);
    }
}

TEST_CASE("metrics match the brute-force oracle on random matrices") {
    Rng rng(101);
    for (int iter = 0; iter < 1000; ++iter) {
        const int c = 2 + static_cast<int>(rng.next_below(5));  // 2..6 classes
        const size_t n = 1 + rng.next_below(60);
        std::vector<int> gold(n), pred(n);
        for (size_t i = 0; i < n; ++i) {
            gold[i] = static_cast<int>(rng.next_below(c));
            pred[i] = static_cast<int>(rng.next_below(c));
        }
        std::vector<std::string> labels;
        for (int i = 0; i < c; ++i) labels.push_back("L" + std::to_string(i));

        const auto m = confusion(std::span<const int>(gold), std::span<const int>(pred), labels);
        const auto want = brute_force_metrics(gold, pred, c);
        for (int cls = 0; cls < c; ++cls) {
            const auto got = precision_recall_f1(m, cls);
            CHECK(got.precision == want.precision[cls]);
            CHECK(got.recall == want.recall[cls]);
            CHECK(got.f1 == want.f1[cls]);
        }
        CHECK(std::fabs(macro_f1(m) - want.macro_f1) <= 1e-12);
        CHECK(accuracy(m) == want.accuracy);
    }
}

TEST_CASE("macro F1 and accuracy are label-order invariant") {
    Rng rng(103);
    for (int iter = 0; iter < 50; ++iter) {
        const size_t n = 1 + rng.next_below(40);
        std::vector<std::string> gold, pred;
        const std::vector<std::string> labels{"A", "B", "C", "D"};
        for (size_t i = 0; i < n; ++i) {
            gold.push_back(labels[rng.next_below(4)]);
            pred.push_back(labels[rng.next_below(4)]);
        }
        auto shuffled = labels;
        Rng perm_rng(iter);
        perm_rng.shuffle(shuffled);

        const auto m1 = confusion(gold, pred, labels);
        const auto m2 = confusion(gold, pred, shuffled);
        CHECK(macro_f1(m1) == doctest::Approx(macro_f1(m2)).epsilon(1e-12));
        CHECK(accuracy(m1) == doctest::Approx(accuracy(m2)).epsilon(1e-12));

        // Accuracy equals the support-weighted mean of per-class recall.
        double weighted_recall = 0.0;
        for (size_t c = 0; c < 4; ++c) {
            const auto pc = precision_recall_f1(m1, c);
            weighted_recall += pc.recall * static_cast<double>(pc.support);
        }
        CHECK(accuracy(m1) ==
              doctest::Approx(weighted_recall / static_cast<double>(n)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate bundles the full metric set and serializes to json") {
    const auto m = confusion({"A", "A", "B"}, {"A", "B", "B"}, {"A", "B"});
    const auto ev = evaluate(m);
    CHECK(ev.n == 3);
    CHECK(ev.labels == std::vector<std::string>{"A", "B"});
    CHECK(ev.per_class.size() == 2);
    CHECK(ev.macro_f1 == doctest::Approx((2.0 / 3.0 + 2.0 / 3.0) / 2.0));

    const auto j = ev.to_json();
    CHECK(j.at("per_class").at("A").at("p").get<double>() == 1.0);
    CHECK(j.at("n").get<int64_t>() == 3);
    const auto back = EvalMetrics::from_json(j);
    CHECK(back.macro_f1 == ev.macro_f1);
    CHECK(back.per_class[1].recall == ev.per_class[1].recall);
}

TEST_CASE("kappa on identical and worked sequences") {
    const std::vector<std::string> same{"A", "B", "A", "C"};
    CHECK(cohens_kappa(same, same) == 1.0);

    const std::vector<std::string> a{"A", "A", "B", "B"};
    const std::vector<std::string> b{"A", "B", "B", "B"};
    CHECK(cohens_kappa(a, b) == doctest::Approx(0.5));
    CHECK(cohens_kappa(b, a) == doctest::Approx(0.5));  // symmetry
}

TEST_CASE("kappa near zero for independent raters") {
    Rng rng(107);
    const std::vector<std::string> labels{"A", "B", "C", "D"};
    std::vector<std::string> a, b;
    for (int i = 0; i < 10000; ++i) {
        a.push_back(labels[rng.next_below(4)]);
        b.push_back(labels[rng.next_below(4)]);
    }
    CHECK(std::fabs(cohens_kappa(a, b)) < 0.05);
}

TEST_CASE("kappa degenerate and error cases") {
    CHECK(cohens_kappa({"A", "A"}, {"A", "A"}) == 1.0);
    // Both raters constant but different: p_e = 0, kappa = 0.
    CHECK(cohens_kappa({"A", "A"}, {"B", "B"}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cohens_kappa({"A"}, {"A", "B"}), ValidationError);
    CHECK_THROWS_AS(cohens_kappa({}, {}), ValidationError);

    // kappa(x, x) = 1 for any non-degenerate x.
    Rng rng(109);
    for (int iter = 0; iter < 20; ++iter) {
        std::vector<std::string> x;
        const size_t n = 1 + rng.next_below(50);
        for (size_t i = 0; i < n; ++i) x.push_back(std::string(1, 'A' + rng.next_below(3)));
        CHECK(cohens_kappa(x, x) == 1.0);
    }
}
