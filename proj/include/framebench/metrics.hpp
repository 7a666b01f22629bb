#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace framebench {

// C x C integer table; rows are gold classes, columns predictions, both in
// `labels` order.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<int64_t> cells;  // row-major, labels.size()^2

    explicit ConfusionMatrix(std::vector<std::string> label_order);

    size_t num_classes() const { return labels.size(); }
    int64_t& at(size_t gold, size_t pred) { return cells[gold * labels.size() + pred]; }
    int64_t at(size_t gold, size_t pred) const { return cells[gold * labels.size() + pred]; }
    int64_t row_sum(size_t gold) const;
    int64_t col_sum(size_t pred) const;
    int64_t total() const;
    int64_t trace() const;
};

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred,
                          std::vector<std::string> label_order);
ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          std::vector<std::string> label_order);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t support = 0;
};

// Zero-denominator convention: precision, recall, and F1 are 0 whenever
// their denominators vanish.
ClassMetrics precision_recall_f1(const ConfusionMatrix& m, size_t cls);

// Unweighted mean of per-class F1 over every class in the label order,
// including classes with zero support.
double macro_f1(const ConfusionMatrix& m);

double accuracy(const ConfusionMatrix& m);  // throws on an empty matrix

struct EvalMetrics {
    std::vector<std::string> labels;
    std::vector<ClassMetrics> per_class;  // aligned with labels
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    int64_t n = 0;

    nlohmann::json to_json() const;
    static EvalMetrics from_json(const nlohmann::json& j);
};

EvalMetrics evaluate(const ConfusionMatrix& m);

// Chance-corrected agreement between two annotators over any shared label
// universe.
double cohens_kappa(const std::vector<std::string>& rater_a,
                    const std::vector<std::string>& rater_b);

}  // namespace framebench
