#include "framebench/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "framebench/errors.hpp"
#include "framebench/kernels.hpp"
#include "framebench/rng.hpp"

namespace framebench {
namespace {

int index_of_label(const std::vector<std::string>& order, const std::string& label) {
    const auto it = std::find(order.begin(), order.end(), label);
    if (it == order.end()) {
        throw ValidationError("label '" + label + "' is not in the model's label order");
    }
    return static_cast<int>(it - order.begin());
}

// Optimizer state per parameter tensor.
struct AdamwState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;

    explicit AdamwState(std::span<ParamView> params) {
        for (const auto& p : params) {
            m.emplace_back(p.value.size(), 0.0f);
            v.emplace_back(p.value.size(), 0.0f);
        }
    }

    void step(std::span<ParamView> params, double lr, const TrainConfig& cfg, int64_t t) {
        const double b1 = cfg.adam_beta1;
        const double b2 = cfg.adam_beta2;
        const kernels::AdamwScalars scalars{
            static_cast<float>(lr),
            static_cast<float>(b1),
            static_cast<float>(b2),
            static_cast<float>(1.0 - b1),
            static_cast<float>(1.0 - b2),
            static_cast<float>(1.0 / (1.0 - std::pow(b1, static_cast<double>(t)))),
            static_cast<float>(1.0 / (1.0 - std::pow(b2, static_cast<double>(t)))),
            static_cast<float>(cfg.adam_epsilon),
            static_cast<float>(cfg.weight_decay),
        };
        const auto& k = kernels::active();
        for (size_t i = 0; i < params.size(); ++i) {
            k.adamw_step(params[i].value.data(), params[i].grad.data(), m[i].data(),
                         v[i].data(), params[i].value.size(), scalars);
        }
    }
};

// Stratified carve-off of a validation slice; deterministic per seed.
std::pair<LabeledDataset, LabeledDataset> carve_validation(const LabeledDataset& train,
                                                           double fraction, uint64_t seed) {
    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < train.size(); ++i) by_class[train.labels[i]].push_back(i);

    std::vector<bool> in_val(train.size(), false);
    for (auto& [cls, members] : by_class) {
        if (members.size() < 2) {
            throw ValidationError("validation carving needs >= 2 rows per class, class '" +
                                  train.label_names[static_cast<size_t>(cls)] + "' has " +
                                  std::to_string(members.size()));
        }
        Rng rng(derive_seed(derive_seed(seed, "validation"), static_cast<uint64_t>(cls)));
        rng.shuffle(members);
        auto take = static_cast<size_t>(
            std::llround(fraction * static_cast<double>(members.size())));
        take = std::min(take, members.size() - 1);
        take = std::max<size_t>(take, 1);
        for (size_t i = 0; i < take; ++i) in_val[members[i]] = true;
    }

    LabeledDataset inner, val;
    inner.label_names = train.label_names;
    val.label_names = train.label_names;
    for (size_t i = 0; i < train.size(); ++i) {
        auto& dst = in_val[i] ? val : inner;
        dst.texts.push_back(train.texts[i]);
        dst.labels.push_back(train.labels[i]);
    }
    return {std::move(inner), std::move(val)};
}

}  // namespace

std::vector<std::string> corpus_label_order(const Corpus& corpus) {
    const auto dist = label_distribution(corpus);
    std::vector<std::string> order;
    for (const FrameLabel label : kAllFrameLabels) {
        if (dist.at(label) > 0) order.emplace_back(frame_code(label));
    }
    return order;
}

LabeledDataset dataset_from_corpus(const Corpus& corpus,
                                   const std::vector<std::string>& label_order) {
    LabeledDataset out;
    out.label_names = label_order;
    for (const auto& ex : corpus.examples) {
        if (!ex.label) {
            throw ValidationError("dataset_from_corpus: unlabeled example " + ex.identity());
        }
        out.texts.push_back(ex.text);
        out.labels.push_back(index_of_label(label_order, std::string(frame_code(*ex.label))));
    }
    return out;
}

LabeledDataset binary_gate_dataset(const Corpus& corpus) {
    LabeledDataset out;
    out.label_names = {std::string(frame_code(FrameLabel::NO06)), kFrameGateLabel};
    for (const auto& ex : corpus.examples) {
        if (!ex.label) {
            throw ValidationError("binary_gate_dataset: unlabeled example " + ex.identity());
        }
        out.texts.push_back(ex.text);
        out.labels.push_back(*ex.label == FrameLabel::NO06 ? 0 : 1);
    }
    return out;
}

std::vector<double> weights_for_order(const ClassWeights& weights,
                                      const std::vector<std::string>& label_order) {
    std::vector<double> out;
    out.reserve(label_order.size());
    for (const auto& name : label_order) {
        const auto label = try_parse_frame_code(name);
        if (!label || !weights.count(*label)) {
            throw ValidationError("no class weight for label '" + name + "'");
        }
        out.push_back(weights.at(*label));
    }
    return out;
}

int64_t default_warmup_steps(int64_t total_steps, double warmup_fraction) {
    return static_cast<int64_t>(
        std::floor(warmup_fraction * static_cast<double>(total_steps)));
}

double lr_schedule(int64_t step, int64_t total_steps, int64_t warmup_steps, double peak_lr) {
    if (total_steps <= warmup_steps) {
        throw ValidationError("lr_schedule: total_steps (" + std::to_string(total_steps) +
                              ") must exceed warmup_steps (" + std::to_string(warmup_steps) + ")");
    }
    if (step < 0 || step > total_steps || warmup_steps < 0) {
        throw ValidationError("lr_schedule: step " + std::to_string(step) +
                              " outside [0, " + std::to_string(total_steps) + "]");
    }
    if (step < warmup_steps) {
        return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    const double progress = static_cast<double>(step - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

// Shared softmax walk for the loss and its gradient. Accumulates in double.
template <typename PerRow>
double weighted_ce_impl(const Matrix& logits, std::span<const int> labels,
                        std::span<const double> class_weights, PerRow&& per_row) {
    if (logits.rows != labels.size()) {
        throw ValidationError("weighted_cross_entropy: " + std::to_string(logits.rows) +
                              " logit rows vs " + std::to_string(labels.size()) + " labels");
    }
    if (class_weights.size() != logits.cols) {
        throw ValidationError("weighted_cross_entropy: " + std::to_string(class_weights.size()) +
                              " class weights vs " + std::to_string(logits.cols) + " classes");
    }
    double weight_sum = 0.0;
    double loss_sum = 0.0;
    for (size_t i = 0; i < logits.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<size_t>(y) >= logits.cols) {
            throw ValidationError("weighted_cross_entropy: label index " + std::to_string(y) +
                                  " out of range");
        }
        const float* row = logits.row(i);
        double max_logit = row[0];
        for (size_t j = 0; j < logits.cols; ++j) {
            if (!std::isfinite(row[j])) {
                throw TrainError("non-finite logit at row " + std::to_string(i));
            }
            max_logit = std::max(max_logit, static_cast<double>(row[j]));
        }
        double denom = 0.0;
        for (size_t j = 0; j < logits.cols; ++j) denom += std::exp(row[j] - max_logit);
        const double log_denom = std::log(denom);
        const double nll = log_denom - (row[y] - max_logit);
        const double w = class_weights[static_cast<size_t>(y)];
        weight_sum += w;
        loss_sum += w * nll;
        per_row(i, y, max_logit, denom, w);
    }
    if (weight_sum <= 0.0) throw ValidationError("weighted_cross_entropy: zero weight mass");
    return loss_sum / weight_sum;
}

}  // namespace

double weighted_cross_entropy(const Matrix& logits, std::span<const int> labels,
                              std::span<const double> class_weights) {
    return weighted_ce_impl(logits, labels, class_weights,
                            [](size_t, int, double, double, double) {});
}

LossAndGrad weighted_cross_entropy_with_grad(const Matrix& logits, std::span<const int> labels,
                                             std::span<const double> class_weights) {
    LossAndGrad out;
    out.dlogits = Matrix(logits.rows, logits.cols);
    double weight_sum = 0.0;
    for (const int y : labels) {
        if (y >= 0 && static_cast<size_t>(y) < class_weights.size()) {
            weight_sum += class_weights[static_cast<size_t>(y)];
        }
    }
    out.loss = weighted_ce_impl(
        logits, labels, class_weights,
        [&](size_t i, int y, double max_logit, double denom, double w) {
            const float* row = logits.row(i);
            float* grad = out.dlogits.row(i);
            const double scale = w / weight_sum;
            for (size_t j = 0; j < logits.cols; ++j) {
                const double softmax = std::exp(row[j] - max_logit) / denom;
                const double indicator = static_cast<size_t>(y) == j ? 1.0 : 0.0;
                grad[j] = static_cast<float>(scale * (softmax - indicator));
            }
        });
    return out;
}

ClipReport clip_gradients(std::span<ParamView> params, double max_norm) {
    if (max_norm <= 0.0) throw ValidationError("clip_gradients: max_norm must be positive");
    const auto& k = kernels::active();
    double sumsq = 0.0;
    for (const auto& p : params) sumsq += k.sumsq(p.grad.data(), p.grad.size());
    if (!std::isfinite(sumsq)) throw TrainError("non-finite gradient norm");
    ClipReport report;
    report.pre_norm = std::sqrt(sumsq);
    if (report.pre_norm > max_norm) {
        const auto factor = static_cast<float>(max_norm / report.pre_norm);
        for (auto& p : params) k.scale(factor, p.grad.data(), p.grad.size());
        report.clipped = true;
    }
    return report;
}

size_t pick_best_epoch(const std::vector<EpochResult>& epochs) {
    if (epochs.empty()) throw ValidationError("pick_best_epoch: no epochs");
    size_t best = 0;
    for (size_t i = 1; i < epochs.size(); ++i) {
        if (epochs[i].metrics.macro_f1 > epochs[best].metrics.macro_f1) best = i;
    }
    return best;
}

RunLogger::RunLogger(const std::string& path) : out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw IoError("cannot open run log '" + path + "' for appending");
}

void RunLogger::log_epoch(const std::string& run_id, const std::string& model_key, double lr,
                          int batch, const EpochResult& epoch) {
    nlohmann::json j{
        {"run_id", run_id},         {"model_key", model_key},
        {"lr", lr},                 {"batch", batch},
        {"epoch", epoch.epoch},     {"loss", epoch.mean_train_loss},
        {"macro_f1", epoch.metrics.macro_f1},
        {"accuracy", epoch.metrics.accuracy},
        {"seconds", epoch.seconds},
    };
    nlohmann::json per;
    for (size_t c = 0; c < epoch.metrics.labels.size(); ++c) {
        const auto& pc = epoch.metrics.per_class[c];
        per[epoch.metrics.labels[c]] = {
            {"p", pc.precision}, {"r", pc.recall}, {"f1", pc.f1}, {"support", pc.support}};
    }
    j["per_class"] = per;
    out_ << j.dump() << "\n";
    out_.flush();
}

EvalMetrics evaluate_model(const Model& model, const LabeledDataset& data, int batch_size) {
    for (const int y : data.labels) {
        if (y < 0 || y >= model.num_classes()) {
            throw ValidationError("evaluation label index " + std::to_string(y) +
                                  " outside the model's " + std::to_string(model.num_classes()) +
                                  " classes");
        }
    }
    if (data.label_names != model.label_order()) {
        throw ValidationError("evaluation label order does not match the model's label order");
    }
    const auto pred = model.predict(data.texts, batch_size);
    const auto m = confusion(std::span<const int>(data.labels), std::span<const int>(pred),
                             model.label_order());
    return evaluate(m);
}

TrainOutcome train_model(Model& model, const LabeledDataset& train, const LabeledDataset& eval,
                         const TrainConfig& config, const TrainIo& io) {
    if (train.size() == 0) throw ValidationError("train_model: empty train set");
    if (config.batch_size <= 0 || config.max_epochs <= 0) {
        throw ValidationError("train_model: batch_size and max_epochs must be positive");
    }
    if (config.grad_accum_steps <= 0) {
        throw ValidationError("train_model: grad_accum_steps must be positive");
    }
    if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0)) {
        throw ValidationError("train_model: warmup_fraction must be in [0, 1)");
    }
    if (train.label_names != model.label_order()) {
        throw ValidationError("train_model: train label order does not match the model");
    }

    std::vector<double> class_weights = config.class_weights;
    if (class_weights.empty()) {
        class_weights.assign(static_cast<size_t>(model.num_classes()), 1.0);
    }
    if (class_weights.size() != static_cast<size_t>(model.num_classes())) {
        throw ValidationError("train_model: class_weights must cover every class");
    }

    LabeledDataset inner_train = train;
    LabeledDataset selection_set = eval;
    if (config.validation_fraction > 0.0) {
        auto [carved_train, carved_val] =
            carve_validation(train, config.validation_fraction, config.seed);
        inner_train = std::move(carved_train);
        selection_set = std::move(carved_val);
    }
    // The selection set must be scorable against this model.
    if (selection_set.label_names != model.label_order()) {
        throw ValidationError("train_model: eval label order does not match the model");
    }

    model.set_reduced_precision(config.mixed_precision);

    const auto n = inner_train.size();
    const auto batches_per_epoch = static_cast<int64_t>(
        (n + static_cast<size_t>(config.batch_size) - 1) / static_cast<size_t>(config.batch_size));
    const int64_t steps_per_epoch =
        (batches_per_epoch + config.grad_accum_steps - 1) / config.grad_accum_steps;
    const int64_t total_steps = steps_per_epoch * config.max_epochs;
    const int64_t warmup_steps = default_warmup_steps(total_steps, config.warmup_fraction);
    if (total_steps <= warmup_steps) {
        throw ValidationError("train_model: schedule would never leave warmup");
    }

    Rng shuffle_rng(derive_seed(config.seed, "batch-order"));
    Rng dropout_rng(derive_seed(config.seed, "dropout"));

    auto params = model.params();
    AdamwState opt(params);

    TrainOutcome outcome;
    std::vector<float> best_snapshot;
    int64_t step = 0;        // schedule position, 0-based
    int64_t adam_t = 0;      // optimizer step count, 1-based in the update
    int64_t accumulated = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        auto order = shuffle_rng.permutation(n);

        double loss_weighted_sum = 0.0;
        size_t loss_examples = 0;
        model.zero_grads();
        accumulated = 0;

        for (int64_t b = 0; b < batches_per_epoch; ++b) {
            const size_t begin = static_cast<size_t>(b) * static_cast<size_t>(config.batch_size);
            const size_t count = std::min(static_cast<size_t>(config.batch_size), n - begin);
            std::vector<std::string> texts(count);
            std::vector<int> labels(count);
            for (size_t i = 0; i < count; ++i) {
                texts[i] = inner_train.texts[order[begin + i]];
                labels[i] = inner_train.labels[order[begin + i]];
            }

            ForwardCache cache;
            const Matrix logits = model.forward(texts, Mode::kTrain, &dropout_rng, &cache);
            auto [loss, dlogits] = weighted_cross_entropy_with_grad(
                logits, labels, class_weights);
            if (!std::isfinite(loss)) {
                throw TrainError("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(b));
            }
            loss_weighted_sum += loss * static_cast<double>(count);
            loss_examples += count;

            // Micro-batches of one accumulation group contribute equally.
            const int64_t group_size =
                std::min<int64_t>(config.grad_accum_steps,
                                  batches_per_epoch - (b / config.grad_accum_steps) *
                                                          config.grad_accum_steps);
            if (config.grad_accum_steps > 1) {
                const auto inv = static_cast<float>(1.0 / static_cast<double>(group_size));
                kernels::active().scale(inv, dlogits.data.data(), dlogits.data.size());
            }
            model.backward(dlogits, cache);
            ++accumulated;

            const bool group_done = accumulated == config.grad_accum_steps ||
                                    b + 1 == batches_per_epoch;
            if (!group_done) continue;

            clip_gradients(params, config.clip_norm);
            const double lr =
                lr_schedule(step, total_steps, warmup_steps, config.learning_rate);
            ++adam_t;
            opt.step(params, lr, config, adam_t);
            ++step;
            model.zero_grads();
            accumulated = 0;
        }

        EpochResult result;
        result.epoch = epoch;
        result.mean_train_loss = loss_weighted_sum / static_cast<double>(loss_examples);
        result.metrics = evaluate_model(model, selection_set, config.batch_size);
        result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                       epoch_start)
                             .count();
        outcome.epochs.push_back(result);
        if (io.logger) {
            io.logger->log_epoch(io.run_id, io.model_key, config.learning_rate,
                                 config.batch_size, result);
        }

        if (best_snapshot.empty() ||
            result.metrics.macro_f1 > outcome.best_metrics.macro_f1) {
            outcome.best_epoch = epoch;
            outcome.best_metrics = result.metrics;
            best_snapshot = model.snapshot();
        }
    }

    model.restore(best_snapshot);
    if (!io.checkpoint_dir.empty()) {
        model.save(io.checkpoint_dir);
        outcome.checkpoint_dir = io.checkpoint_dir;
    }
    return outcome;
}

}  // namespace framebench
