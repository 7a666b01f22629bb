#include "framebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "framebench/errors.hpp"

namespace framebench {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> label_order)
    : labels(std::move(label_order)), cells(labels.size() * labels.size(), 0) {}

int64_t ConfusionMatrix::row_sum(size_t gold) const {
    int64_t sum = 0;
    for (size_t j = 0; j < labels.size(); ++j) sum += at(gold, j);
    return sum;
}

int64_t ConfusionMatrix::col_sum(size_t pred) const {
    int64_t sum = 0;
    for (size_t i = 0; i < labels.size(); ++i) sum += at(i, pred);
    return sum;
}

int64_t ConfusionMatrix::total() const {
    return std::accumulate(cells.begin(), cells.end(), int64_t{0});
}

int64_t ConfusionMatrix::trace() const {
    int64_t sum = 0;
    for (size_t i = 0; i < labels.size(); ++i) sum += at(i, i);
    return sum;
}

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred,
                          std::vector<std::string> label_order) {
    if (gold.size() != pred.size()) {
        throw ValidationError("confusion: gold has " + std::to_string(gold.size()) +
                              " entries, predictions " + std::to_string(pred.size()));
    }
    ConfusionMatrix m(std::move(label_order));
    const int c = static_cast<int>(m.num_classes());
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= c || pred[i] < 0 || pred[i] >= c) {
            throw ValidationError("confusion: label index out of range at position " +
                                  std::to_string(i));
        }
        ++m.at(static_cast<size_t>(gold[i]), static_cast<size_t>(pred[i]));
    }
    return m;
}

ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          std::vector<std::string> label_order) {
    const auto index_of = [&](const std::string& label) {
        const auto it = std::find(label_order.begin(), label_order.end(), label);
        if (it == label_order.end()) {
            throw ValidationError("confusion: label '" + label + "' not in label order");
        }
        return static_cast<int>(it - label_order.begin());
    };
    std::vector<int> g, p;
    g.reserve(gold.size());
    p.reserve(pred.size());
    for (const auto& s : gold) g.push_back(index_of(s));
    for (const auto& s : pred) p.push_back(index_of(s));
    return confusion(std::span<const int>(g), std::span<const int>(p), std::move(label_order));
}

ClassMetrics precision_recall_f1(const ConfusionMatrix& m, size_t cls) {
    if (cls >= m.num_classes()) throw ValidationError("precision_recall_f1: bad class index");
    ClassMetrics out;
    const auto tp = static_cast<double>(m.at(cls, cls));
    const auto predicted = static_cast<double>(m.col_sum(cls));
    const auto actual = static_cast<double>(m.row_sum(cls));
    out.support = m.row_sum(cls);
    out.precision = predicted > 0 ? tp / predicted : 0.0;
    out.recall = actual > 0 ? tp / actual : 0.0;
    const double pr = out.precision + out.recall;
    out.f1 = pr > 0 ? 2.0 * out.precision * out.recall / pr : 0.0;
    return out;
}

double macro_f1(const ConfusionMatrix& m) {
    if (m.num_classes() == 0) throw ValidationError("macro_f1: no classes");
    double sum = 0.0;
    for (size_t c = 0; c < m.num_classes(); ++c) sum += precision_recall_f1(m, c).f1;
    return sum / static_cast<double>(m.num_classes());
}

double accuracy(const ConfusionMatrix& m) {
    const int64_t total = m.total();
    if (total == 0) throw ValidationError("accuracy: empty confusion matrix");
    return static_cast<double>(m.trace()) / static_cast<double>(total);
}

EvalMetrics evaluate(const ConfusionMatrix& m) {
    EvalMetrics out;
    out.labels = m.labels;
    for (size_t c = 0; c < m.num_classes(); ++c) out.per_class.push_back(precision_recall_f1(m, c));
    out.macro_f1 = macro_f1(m);
    out.accuracy = accuracy(m);
    out.n = m.total();
    return out;
}

nlohmann::json EvalMetrics::to_json() const {
    nlohmann::json per;
    for (size_t c = 0; c < labels.size(); ++c) {
        per[labels[c]] = {{"p", per_class[c].precision},
                          {"r", per_class[c].recall},
                          {"f1", per_class[c].f1},
                          {"support", per_class[c].support}};
    }
    return {{"per_class", per}, {"macro_f1", macro_f1}, {"accuracy", accuracy}, {"n", n},
            {"label_order", labels}};
}

EvalMetrics EvalMetrics::from_json(const nlohmann::json& j) {
    EvalMetrics out;
    out.labels = j.at("label_order").get<std::vector<std::string>>();
    const auto& per = j.at("per_class");
    for (const auto& label : out.labels) {
        const auto& p = per.at(label);
        out.per_class.push_back({p.at("p").get<double>(), p.at("r").get<double>(),
                                 p.at("f1").get<double>(), p.at("support").get<int64_t>()});
    }
    out.macro_f1 = j.at("macro_f1").get<double>();
    out.accuracy = j.at("accuracy").get<double>();
    out.n = j.at("n").get<int64_t>();
    return out;
}

double cohens_kappa(const std::vector<std::string>& rater_a,
                    const std::vector<std::string>& rater_b) {
    if (rater_a.size() != rater_b.size()) {
        throw ValidationError("cohens_kappa: sequences differ in length (" +
                              std::to_string(rater_a.size()) + " vs " +
                              std::to_string(rater_b.size()) + ")");
    }
    if (rater_a.empty()) throw ValidationError("cohens_kappa: empty sequences");

    const auto n = static_cast<double>(rater_a.size());
    std::map<std::string, double> marg_a, marg_b;
    double agreements = 0.0;
    for (size_t i = 0; i < rater_a.size(); ++i) {
        marg_a[rater_a[i]] += 1.0;
        marg_b[rater_b[i]] += 1.0;
        if (rater_a[i] == rater_b[i]) agreements += 1.0;
    }
    const double p_o = agreements / n;
    double p_e = 0.0;
    for (const auto& [label, count_a] : marg_a) {
        const auto it = marg_b.find(label);
        if (it != marg_b.end()) p_e += (count_a / n) * (it->second / n);
    }
    if (std::fabs(1.0 - p_e) < 1e-12) {
        if (std::fabs(1.0 - p_o) < 1e-12) return 1.0;
        throw ValidationError("cohens_kappa: degenerate marginals (p_e = 1) with disagreement");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace framebench
