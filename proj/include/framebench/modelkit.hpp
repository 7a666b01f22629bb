#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "framebench/rng.hpp"
#include "framebench/tensor.hpp"

namespace framebench {

struct BackboneSpec {
    std::string key;            // registry handle, e.g. "roberta"
    std::string pretrained_id;  // published checkpoint identifier
    int hidden_dim = 768;
    int64_t parameter_count = 0;  // informational
    std::string tokenizer_family;
    bool uncased = false;
    bool test_only = false;
};

// The five production backbones. The tiny test encoder is deliberately not
// listed here; fetch it through toy_spec() or find_spec("toy").
const std::vector<BackboneSpec>& registry();
const BackboneSpec& toy_spec();
std::optional<BackboneSpec> find_spec(const std::string& key);

// Lowercasing word splitter with a 64-bit hash into a fixed-size vocabulary.
// No external vocab files; collisions are acceptable at test scale.
class HashTokenizer {
public:
    HashTokenizer(size_t vocab_size, int max_length, bool uncased)
        : vocab_size_(vocab_size), max_length_(max_length), uncased_(uncased) {}

    std::vector<int32_t> encode(std::string_view text) const;
    size_t vocab_size() const { return vocab_size_; }
    int max_length() const { return max_length_; }

private:
    size_t vocab_size_;
    int max_length_;
    bool uncased_;
};

struct ModelOptions {
    std::vector<std::string> label_order;  // authoritative logit decoding order
    int max_length = 256;
    size_t vocab_size = 4096;
};

enum class Mode { kTrain, kEval };

struct ParamView {
    std::string name;
    std::span<float> value;
    std::span<float> grad;
};

// Activations recorded by forward() that backward() needs.
struct ForwardCache {
    Mode mode = Mode::kEval;
    std::vector<std::vector<int32_t>> token_ids;
    Matrix pooled_input;   // B x H, cls + mean embedding
    Matrix pooled;         // B x H, encoder output (tanh applied)
    Matrix hidden_pre;     // B x 512, pre-activation
    Matrix hidden;         // B x 512, after relu + dropout
    std::vector<float> dropout_scale;  // B x 512; 0 or 1/(1-p); empty in eval
};

// A backbone plus the shared classification head:
// encoder (hidden_dim) -> affine 512 -> relu -> dropout(0.1) -> affine C.
// The pooled representation is the sequence-start state.
class Model {
public:
    static constexpr int kPreClassifierDim = 512;
    static constexpr float kDropoutRate = 0.1f;

    // Seeded random initialization; only test-only specs may be built this
    // way, production specs need a checkpoint (see load()).
    static Model build(const BackboneSpec& spec, const ModelOptions& opts, uint64_t seed);

    Matrix forward(std::span<const std::string> texts, Mode mode, Rng* dropout_rng = nullptr,
                   ForwardCache* cache = nullptr) const;
    void backward(const Matrix& dlogits, const ForwardCache& cache);
    void zero_grads();
    std::vector<ParamView> params();

    std::vector<float> snapshot() const;
    void restore(std::span<const float> snapshot);

    std::vector<int> predict(std::span<const std::string> texts, int batch_size = 32) const;

    const BackboneSpec& spec() const { return spec_; }
    const std::vector<std::string>& label_order() const { return label_order_; }
    int num_classes() const { return static_cast<int>(label_order_.size()); }
    int max_length() const { return tokenizer_.max_length(); }
    const std::string& pooling() const { return pooling_; }

    // Reduced-precision mode: activations are rounded through binary16 at
    // layer boundaries; parameters and gradients stay float.
    void set_reduced_precision(bool on) { reduced_precision_ = on; }
    bool reduced_precision() const { return reduced_precision_; }

    int64_t head_parameter_count() const;

    // Checkpoint directory: model.json sidecar + weights.bin. The sidecar's
    // label order is authoritative for decoding logits.
    void save(const std::string& dir) const;
    static Model load(const std::string& dir);

private:
    Model(BackboneSpec spec, ModelOptions opts);

    void encoder_forward(ForwardCache& cache) const;
    void apply_rounding(Matrix& m) const;

    BackboneSpec spec_;
    std::vector<std::string> label_order_;
    HashTokenizer tokenizer_;
    std::string pooling_ = "sequence_start";
    bool reduced_precision_ = false;

    // Toy encoder: hashed embeddings, a sequence-start token, and one dense
    // mixing layer with tanh.
    Matrix embed_;                 // V x H
    std::vector<float> cls_;       // H
    Matrix mix_w_;                 // H x H
    std::vector<float> mix_b_;     // H

    Matrix pre_w_;                 // 512 x H
    std::vector<float> pre_b_;     // 512
    Matrix out_w_;                 // C x 512
    std::vector<float> out_b_;     // C

    Matrix g_embed_;
    std::vector<float> g_cls_;
    Matrix g_mix_w_;
    std::vector<float> g_mix_b_;
    Matrix g_pre_w_;
    std::vector<float> g_pre_b_;
    Matrix g_out_w_;
    std::vector<float> g_out_b_;
};

// Spec-facing alias for Model::build.
Model build_model(const BackboneSpec& spec, const ModelOptions& opts, uint64_t seed);

}  // namespace framebench
