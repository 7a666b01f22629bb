#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "framebench/corpus.hpp"
#include "framebench/dataprep.hpp"
#include "framebench/metrics.hpp"
#include "framebench/modelkit.hpp"
#include "framebench/tensor.hpp"

namespace framebench {

// Texts plus class indices into label_names; the trainer is agnostic about
// what the labels mean, so the binary no-frame gate reuses it unchanged.
struct LabeledDataset {
    std::vector<std::string> texts;
    std::vector<int> labels;
    std::vector<std::string> label_names;

    size_t size() const { return texts.size(); }
};

// Present classes of a fully labeled corpus in canonical code order.
std::vector<std::string> corpus_label_order(const Corpus& corpus);
LabeledDataset dataset_from_corpus(const Corpus& corpus,
                                   const std::vector<std::string>& label_order);
// NO06 vs everything else, over the full corpus.
inline constexpr const char* kFrameGateLabel = "FRAME";
LabeledDataset binary_gate_dataset(const Corpus& corpus);

// Class weights aligned to a label order; throws if a class is missing.
std::vector<double> weights_for_order(const ClassWeights& weights,
                                      const std::vector<std::string>& label_order);

struct TrainConfig {
    double learning_rate = 2e-5;  // peak
    int batch_size = 16;
    int max_epochs = 6;
    double weight_decay = 0.01;
    double adam_epsilon = 1e-8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double warmup_fraction = 0.10;
    double clip_norm = 1.0;
    uint64_t seed = 42;
    bool mixed_precision = false;
    int grad_accum_steps = 1;
    // When > 0, a stratified slice of the train set is carved off and used
    // for per-epoch evaluation/selection instead of the provided eval set.
    double validation_fraction = 0.0;
    std::vector<double> class_weights;  // aligned to the model's label order; empty = uniform
};

struct EpochResult {
    int epoch = 0;  // 1-based
    double mean_train_loss = 0.0;
    EvalMetrics metrics;
    double seconds = 0.0;
};

struct TrainOutcome {
    std::vector<EpochResult> epochs;
    int best_epoch = 0;  // 1-based
    EvalMetrics best_metrics;
    std::string checkpoint_dir;  // empty unless a retention directory was given
};

// Linear warmup to the peak, then cosine decay to zero at total_steps.
double lr_schedule(int64_t step, int64_t total_steps, int64_t warmup_steps, double peak_lr);

int64_t default_warmup_steps(int64_t total_steps, double warmup_fraction);

// Weighted mean of per-example negative log-softmax:
// sum_i w(y_i) * nll_i / sum_i w(y_i). Throws on non-finite logits.
double weighted_cross_entropy(const Matrix& logits, std::span<const int> labels,
                              std::span<const double> class_weights);
struct LossAndGrad {
    double loss = 0.0;
    Matrix dlogits;
};
LossAndGrad weighted_cross_entropy_with_grad(const Matrix& logits, std::span<const int> labels,
                                             std::span<const double> class_weights);

struct ClipReport {
    double pre_norm = 0.0;
    bool clipped = false;
};
// Scales every gradient by max_norm / norm when the joint L2 norm exceeds
// max_norm. Throws on non-finite gradients.
ClipReport clip_gradients(std::span<ParamView> params, double max_norm);

// Argmax of macro F1; ties go to the earliest epoch. Returns a 0-based index.
size_t pick_best_epoch(const std::vector<EpochResult>& epochs);

// Append-only JSON-lines run log, one record per epoch.
class RunLogger {
public:
    explicit RunLogger(const std::string& path);
    void log_epoch(const std::string& run_id, const std::string& model_key, double lr,
                   int batch, const EpochResult& epoch);

private:
    std::ofstream out_;
};

struct TrainIo {
    RunLogger* logger = nullptr;
    std::string run_id;
    std::string model_key;
    std::string checkpoint_dir;  // retain the best checkpoint here when set
};

// Full fine-tuning run: decoupled-weight-decay adaptive-moment steps under
// the warmup+cosine schedule with global-norm clipping and the weighted
// loss; evaluates after every epoch and retains the weights of the epoch
// with the highest macro F1 (the model holds them on return).
TrainOutcome train_model(Model& model, const LabeledDataset& train, const LabeledDataset& eval,
                         const TrainConfig& config, const TrainIo& io = {});

EvalMetrics evaluate_model(const Model& model, const LabeledDataset& data, int batch_size = 32);

}  // namespace framebench
