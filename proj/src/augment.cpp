#include "framebench/augment.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <future>

#include <json.hpp>

#include "framebench/rng.hpp"

namespace framebench {

std::map<FrameLabel, size_t> AugmentationPlan::assignments_per_class() const {
    std::map<FrameLabel, size_t> counts;
    for (const auto& [label, n] : original_counts) counts[label] = 0;
    for (const auto& a : assignments) ++counts[a.label];
    return counts;
}

AugmentationPlan plan_augmentation(const std::map<FrameLabel, size_t>& train_counts,
                                   const TargetRule& rule, uint64_t seed) {
    if (train_counts.empty()) throw ValidationError("plan_augmentation: no classes");
    size_t largest = 0;
    for (const auto& [label, n] : train_counts) {
        if (n == 0) {
            throw ValidationError("plan_augmentation: class " +
                                  std::string(frame_code(label)) + " is empty");
        }
        largest = std::max(largest, n);
    }
    const size_t target_value = rule.kind == TargetRule::Kind::kFixedTarget
                                    ? rule.fixed_target
                                    : (largest + 1) / 2;

    AugmentationPlan plan;
    plan.seed = seed;
    plan.original_counts = train_counts;
    for (const auto& [label, count] : train_counts) {
        const size_t target = count == largest ? count : target_value;
        plan.targets[label] = target;
        const size_t needed = target > count ? target - count : 0;
        if (needed == 0) continue;

        Rng rng(derive_seed(derive_seed(seed, "augment"), frame_code(label)));
        const auto order = rng.permutation(count);
        for (size_t k = 0; k < needed; ++k) {
            const size_t source = order[k % count];
            const size_t uses = k / count;  // completed visits to this source
            Assignment a;
            a.label = label;
            a.source_ordinal = source;
            a.route = uses % 2 == 0 ? Pivot::kDe : Pivot::kFr;
            a.copy_index = static_cast<int>(uses / 2) + 1;
            plan.assignments.push_back(a);
        }
    }
    return plan;
}

void write_plan(const std::string& path, const AugmentationPlan& plan) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    auto counts_json = [](const std::map<FrameLabel, size_t>& m) {
        nlohmann::json out;
        for (const auto& [label, n] : m) out[std::string(frame_code(label))] = n;
        return out;
    };
    j["original_counts"] = counts_json(plan.original_counts);
    j["targets"] = counts_json(plan.targets);
    j["assignments"] = nlohmann::json::array();
    for (const auto& a : plan.assignments) {
        j["assignments"].push_back({{"label", frame_code(a.label)},
                                    {"source_ordinal", a.source_ordinal},
                                    {"route", pivot_code(a.route)},
                                    {"copy_index", a.copy_index}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

AugmentationPlan read_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": invalid plan: " + e.what());
    }
    AugmentationPlan plan;
    plan.seed = j.value("seed", uint64_t{0});
    auto counts_from = [&](const char* key) {
        std::map<FrameLabel, size_t> m;
        for (const auto& [code, n] : j.at(key).items()) m[parse_frame_code(code)] = n;
        return m;
    };
    plan.original_counts = counts_from("original_counts");
    plan.targets = counts_from("targets");
    for (const auto& a : j.at("assignments")) {
        plan.assignments.push_back({parse_frame_code(a.at("label").get<std::string>()),
                                    a.at("source_ordinal").get<size_t>(),
                                    parse_pivot_code(a.at("route").get<std::string>()),
                                    a.at("copy_index").get<int>()});
    }
    return plan;
}

std::string back_translate(const std::string& text, Pivot route, TranslatorClient& client,
                           int max_retries) {
    if (text.empty()) {
        throw TranslationError("back_translate: empty source text", Lang::kEn, pivot_lang(route));
    }
    const auto hop = [&](const std::string& input, Lang from, Lang to) {
        for (int attempt = 0;; ++attempt) {
            try {
                std::string out = client.translate(input, from, to);
                if (out.empty()) throw TranslationError("empty translation", from, to);
                return out;
            } catch (const TranslationError&) {
                if (attempt >= max_retries) throw;
            }
        }
    };
    const Lang pivot = pivot_lang(route);
    const std::string via = hop(text, Lang::kEn, pivot);
    return hop(via, pivot, Lang::kEn);
}

Corpus augment_dataset(const Corpus& train, const AugmentationPlan& plan,
                       TranslatorClient& client, const AugmentOptions& options) {
    // Resolve per-class ordinals against the train corpus order.
    std::map<FrameLabel, std::vector<size_t>> members;
    for (size_t i = 0; i < train.examples.size(); ++i) {
        const auto& ex = train.examples[i];
        if (ex.label) members[*ex.label].push_back(i);
    }
    for (const auto& [label, expected] : plan.original_counts) {
        const size_t actual = members.count(label) ? members[label].size() : 0;
        if (actual != expected) {
            throw ValidationError("augmentation plan was built for " + std::to_string(expected) +
                                  " " + std::string(frame_code(label)) + " rows, corpus has " +
                                  std::to_string(actual));
        }
    }

    Corpus out = train;

    const auto run_one = [&](const Assignment& a) {
        const auto& src = train.examples[members.at(a.label).at(a.source_ordinal)];
        return back_translate(src.text, a.route, client, options.max_retries);
    };
    const auto commit = [&](const Assignment& a, std::string text) {
        const auto& src = train.examples[members.at(a.label).at(a.source_ordinal)];
        LabeledExample ex;
        ex.webpage_id = src.webpage_id;
        ex.paragraph_id = src.paragraph_id;
        ex.text = std::move(text);
        ex.label = src.label;
        ex.provenance = Provenance::kAugmented;
        ex.parent = ParentRef{src.webpage_id, src.paragraph_id};
        ex.route = a.route;
        ex.copy_index = a.copy_index;
        out.examples.push_back(std::move(ex));
    };

    const auto fail = [&](size_t index, const char* what) {
        throw AugmentationError("augmentation failed at assignment " + std::to_string(index) +
                                    " of " + std::to_string(plan.assignments.size()) + " (" +
                                    std::string(frame_code(plan.assignments[index].label)) +
                                    " via " +
                                    std::string(pivot_code(plan.assignments[index].route)) +
                                    "): " + what + "; " + std::to_string(index) +
                                    " assignment(s) completed",
                                index, index);
    };

    if (options.max_in_flight <= 1) {
        for (size_t i = 0; i < plan.assignments.size(); ++i) {
            try {
                commit(plan.assignments[i], run_one(plan.assignments[i]));
            } catch (const TranslationError& e) {
                fail(i, e.what());
            }
        }
        return out;
    }

    // Bounded window of in-flight translator calls; commits stay in plan
    // order so the output corpus is deterministic.
    std::deque<std::pair<size_t, std::future<std::string>>> window;
    size_t next = 0;
    const size_t limit = static_cast<size_t>(options.max_in_flight);
    while (next < plan.assignments.size() || !window.empty()) {
        while (next < plan.assignments.size() && window.size() < limit) {
            const auto& a = plan.assignments[next];
            window.emplace_back(next, std::async(std::launch::async, run_one, a));
            ++next;
        }
        auto& [index, fut] = window.front();
        try {
            commit(plan.assignments[index], fut.get());
        } catch (const TranslationError& e) {
            const size_t failed = index;
            // Drain remaining futures before throwing.
            window.pop_front();
            for (auto& [i, f] : window) {
                try {
                    f.get();
                } catch (...) {
                }
            }
            fail(failed, e.what());
        }
        window.pop_front();
    }
    return out;
}

}  // namespace framebench
