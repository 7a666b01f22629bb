#include "framebench/modelkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "framebench/errors.hpp"
#include "framebench/kernels.hpp"

namespace framebench {
namespace {

constexpr char kWeightsMagic[8] = {'F', 'B', 'W', 'T', '0', '0', '0', '1'};

std::vector<BackboneSpec> make_registry() {
    return {
        {"bert", "bert-base-uncased", 768, 110'000'000, "wordpiece", true, false},
        {"roberta", "roberta-base", 768, 125'000'000, "byte-bpe", false, false},
        {"deberta", "microsoft/deberta-v3-base", 768, 184'000'000, "sentencepiece", false, false},
        {"distilbert", "distilbert-base-uncased", 768, 66'000'000, "wordpiece", true, false},
        {"albert", "albert-base-v2", 768, 12'000'000, "sentencepiece", true, false},
    };
}

void fill_gaussian(Rng& rng, std::span<float> dst, double stddev) {
    for (auto& x : dst) x = static_cast<float>(rng.next_gaussian(0.0, stddev));
}

// The default affine initializer: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
// for both weights and bias.
void fill_affine(Rng& rng, Matrix& w, std::vector<float>& b, size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : w.data) x = static_cast<float>(rng.next_uniform(-bound, bound));
    for (auto& x : b) x = static_cast<float>(rng.next_uniform(-bound, bound));
}

void add_colsum(const Matrix& m, std::vector<float>& acc) {
    for (size_t i = 0; i < m.rows; ++i) {
        const float* row = m.row(i);
        for (size_t j = 0; j < m.cols; ++j) acc[j] += row[j];
    }
}

}  // namespace

const std::vector<BackboneSpec>& registry() {
    static const std::vector<BackboneSpec> specs = make_registry();
    return specs;
}

const BackboneSpec& toy_spec() {
    static const BackboneSpec spec{"toy", "framebench/toy-encoder", 768, 0, "hash", true, true};
    return spec;
}

std::optional<BackboneSpec> find_spec(const std::string& key) {
    for (const auto& spec : registry()) {
        if (spec.key == key) return spec;
    }
    if (key == toy_spec().key) return toy_spec();
    return std::nullopt;
}

std::vector<int32_t> HashTokenizer::encode(std::string_view text) const {
    std::vector<int32_t> ids;
    std::string token;
    const auto flush = [&] {
        if (token.empty() || ids.size() >= static_cast<size_t>(max_length_)) {
            token.clear();
            return;
        }
        ids.push_back(static_cast<int32_t>(fnv1a64(token) % vocab_size_));
        token.clear();
    };
    for (const char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c) || c >= 0x80) {
            token.push_back(uncased_ ? static_cast<char>(std::tolower(c)) : raw);
        } else {
            flush();
        }
    }
    flush();
    return ids;
}

Model::Model(BackboneSpec spec, ModelOptions opts)
    : spec_(std::move(spec)),
      label_order_(std::move(opts.label_order)),
      tokenizer_(opts.vocab_size, opts.max_length, spec_.uncased) {
    if (label_order_.size() < 2) {
        throw ValidationError("model needs at least 2 classes, got " +
                              std::to_string(label_order_.size()));
    }
    const auto h = static_cast<size_t>(spec_.hidden_dim);
    const size_t c = label_order_.size();
    embed_ = Matrix(opts.vocab_size, h);
    cls_.assign(h, 0.0f);
    mix_w_ = Matrix(h, h);
    mix_b_.assign(h, 0.0f);
    pre_w_ = Matrix(kPreClassifierDim, h);
    pre_b_.assign(kPreClassifierDim, 0.0f);
    out_w_ = Matrix(c, kPreClassifierDim);
    out_b_.assign(c, 0.0f);

    g_embed_ = Matrix(opts.vocab_size, h);
    g_cls_.assign(h, 0.0f);
    g_mix_w_ = Matrix(h, h);
    g_mix_b_.assign(h, 0.0f);
    g_pre_w_ = Matrix(kPreClassifierDim, h);
    g_pre_b_.assign(kPreClassifierDim, 0.0f);
    g_out_w_ = Matrix(c, kPreClassifierDim);
    g_out_b_.assign(c, 0.0f);
}

Model Model::build(const BackboneSpec& spec, const ModelOptions& opts, uint64_t seed) {
    if (!find_spec(spec.key)) throw ValidationError("unknown backbone key '" + spec.key + "'");
    if (!spec.test_only) {
        throw CheckpointError("backbone '" + spec.key + "' (" + spec.pretrained_id +
                              ") needs pretrained weights, which this build cannot fetch; "
                              "load a converted checkpoint directory instead");
    }
    Model model(spec, opts);
    Rng rng(derive_seed(seed, "model-init"));
    fill_gaussian(rng, model.embed_.data, 0.02);
    fill_gaussian(rng, model.cls_, 0.02);
    fill_affine(rng, model.mix_w_, model.mix_b_, model.mix_w_.cols);
    fill_affine(rng, model.pre_w_, model.pre_b_, model.pre_w_.cols);
    fill_affine(rng, model.out_w_, model.out_b_, model.out_w_.cols);
    return model;
}

Model build_model(const BackboneSpec& spec, const ModelOptions& opts, uint64_t seed) {
    return Model::build(spec, opts, seed);
}

void Model::apply_rounding(Matrix& m) const {
    if (reduced_precision_) kernels::active().round_f16(m.data.data(), m.data.size());
}

void Model::encoder_forward(ForwardCache& cache) const {
    const auto& k = kernels::active();
    const size_t batch = cache.token_ids.size();
    const auto h = static_cast<size_t>(spec_.hidden_dim);

    cache.pooled_input = Matrix(batch, h);
    for (size_t i = 0; i < batch; ++i) {
        float* row = cache.pooled_input.row(i);
        std::memcpy(row, cls_.data(), h * sizeof(float));
        const auto& ids = cache.token_ids[i];
        if (ids.empty()) continue;
        const float inv = 1.0f / static_cast<float>(ids.size());
        for (const int32_t id : ids) k.axpy(inv, embed_.row(static_cast<size_t>(id)), row, h);
    }

    cache.pooled = Matrix(batch, h);
    k.gemm_nt(cache.pooled_input.data.data(), mix_w_.data.data(), mix_b_.data(),
              cache.pooled.data.data(), batch, h, h);
    for (auto& x : cache.pooled.data) x = std::tanh(x);
    apply_rounding(cache.pooled);
}

Matrix Model::forward(std::span<const std::string> texts, Mode mode, Rng* dropout_rng,
                      ForwardCache* cache) const {
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.mode = mode;
    c.token_ids.clear();
    c.token_ids.reserve(texts.size());
    for (const auto& text : texts) c.token_ids.push_back(tokenizer_.encode(text));

    encoder_forward(c);

    const auto& k = kernels::active();
    const size_t batch = texts.size();
    const auto h = static_cast<size_t>(spec_.hidden_dim);
    const size_t hid = kPreClassifierDim;
    const size_t classes = label_order_.size();

    c.hidden_pre = Matrix(batch, hid);
    k.gemm_nt(c.pooled.data.data(), pre_w_.data.data(), pre_b_.data(),
              c.hidden_pre.data.data(), batch, hid, h);

    c.hidden = Matrix(batch, hid);
    k.relu(c.hidden_pre.data.data(), c.hidden.data.data(), batch * hid);

    c.dropout_scale.clear();
    if (mode == Mode::kTrain) {
        if (!dropout_rng) throw TrainError("train-mode forward needs a dropout rng");
        c.dropout_scale.resize(batch * hid);
        const float keep_scale = 1.0f / (1.0f - kDropoutRate);
        for (size_t i = 0; i < c.dropout_scale.size(); ++i) {
            const bool keep = dropout_rng->next_double() >= kDropoutRate;
            c.dropout_scale[i] = keep ? keep_scale : 0.0f;
            c.hidden.data[i] *= c.dropout_scale[i];
        }
    }
    apply_rounding(c.hidden);

    Matrix logits(batch, classes);
    k.gemm_nt(c.hidden.data.data(), out_w_.data.data(), out_b_.data(), logits.data.data(),
              batch, classes, hid);
    return logits;
}

void Model::backward(const Matrix& dlogits, const ForwardCache& cache) {
    const auto& k = kernels::active();
    const size_t batch = dlogits.rows;
    const auto h = static_cast<size_t>(spec_.hidden_dim);
    const size_t hid = kPreClassifierDim;
    const size_t classes = label_order_.size();
    if (dlogits.cols != classes || cache.hidden.rows != batch) {
        throw TrainError("backward: cache does not match the logit gradients");
    }

    // Output affine.
    k.gemm_tn_acc(dlogits.data.data(), cache.hidden.data.data(), g_out_w_.data.data(),
                  batch, classes, hid);
    add_colsum(dlogits, g_out_b_);

    Matrix d_hidden(batch, hid);
    k.gemm_nn_acc(dlogits.data.data(), out_w_.data.data(), d_hidden.data.data(),
                  batch, classes, hid);

    if (cache.mode == Mode::kTrain) {
        for (size_t i = 0; i < d_hidden.data.size(); ++i) {
            d_hidden.data[i] *= cache.dropout_scale[i];
        }
    }

    Matrix d_hidden_pre(batch, hid);
    k.relu_backward(cache.hidden_pre.data.data(), d_hidden.data.data(),
                    d_hidden_pre.data.data(), batch * hid);

    // Pre-classifier affine.
    k.gemm_tn_acc(d_hidden_pre.data.data(), cache.pooled.data.data(), g_pre_w_.data.data(),
                  batch, hid, h);
    add_colsum(d_hidden_pre, g_pre_b_);

    Matrix d_pooled(batch, h);
    k.gemm_nn_acc(d_hidden_pre.data.data(), pre_w_.data.data(), d_pooled.data.data(),
                  batch, hid, h);

    // tanh' = 1 - z^2.
    for (size_t i = 0; i < d_pooled.data.size(); ++i) {
        const float z = cache.pooled.data[i];
        d_pooled.data[i] *= 1.0f - z * z;
    }

    // Encoder mixing layer.
    k.gemm_tn_acc(d_pooled.data.data(), cache.pooled_input.data.data(), g_mix_w_.data.data(),
                  batch, h, h);
    add_colsum(d_pooled, g_mix_b_);

    Matrix d_input(batch, h);
    k.gemm_nn_acc(d_pooled.data.data(), mix_w_.data.data(), d_input.data.data(), batch, h, h);

    add_colsum(d_input, g_cls_);
    for (size_t i = 0; i < batch; ++i) {
        const auto& ids = cache.token_ids[i];
        if (ids.empty()) continue;
        const float inv = 1.0f / static_cast<float>(ids.size());
        for (const int32_t id : ids) {
            k.axpy(inv, d_input.row(i), g_embed_.row(static_cast<size_t>(id)), h);
        }
    }
}

void Model::zero_grads() {
    g_embed_.zero();
    std::fill(g_cls_.begin(), g_cls_.end(), 0.0f);
    g_mix_w_.zero();
    std::fill(g_mix_b_.begin(), g_mix_b_.end(), 0.0f);
    g_pre_w_.zero();
    std::fill(g_pre_b_.begin(), g_pre_b_.end(), 0.0f);
    g_out_w_.zero();
    std::fill(g_out_b_.begin(), g_out_b_.end(), 0.0f);
}

std::vector<ParamView> Model::params() {
    return {
        {"encoder.embed", embed_.data, g_embed_.data},
        {"encoder.cls", cls_, g_cls_},
        {"encoder.mix.weight", mix_w_.data, g_mix_w_.data},
        {"encoder.mix.bias", mix_b_, g_mix_b_},
        {"head.pre_classifier.weight", pre_w_.data, g_pre_w_.data},
        {"head.pre_classifier.bias", pre_b_, g_pre_b_},
        {"head.classifier.weight", out_w_.data, g_out_w_.data},
        {"head.classifier.bias", out_b_, g_out_b_},
    };
}

std::vector<float> Model::snapshot() const {
    std::vector<float> out;
    auto& self = const_cast<Model&>(*this);
    for (const auto& p : self.params()) out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
}

void Model::restore(std::span<const float> snapshot) {
    size_t offset = 0;
    for (auto& p : params()) {
        if (offset + p.value.size() > snapshot.size()) {
            throw CheckpointError("parameter snapshot is too short");
        }
        std::copy_n(snapshot.begin() + offset, p.value.size(), p.value.begin());
        offset += p.value.size();
    }
    if (offset != snapshot.size()) throw CheckpointError("parameter snapshot is too long");
}

std::vector<int> Model::predict(std::span<const std::string> texts, int batch_size) const {
    std::vector<int> out;
    out.reserve(texts.size());
    const auto step = static_cast<size_t>(std::max(1, batch_size));
    for (size_t start = 0; start < texts.size(); start += step) {
        const size_t n = std::min(step, texts.size() - start);
        const Matrix logits = forward(texts.subspan(start, n), Mode::kEval);
        for (size_t i = 0; i < n; ++i) {
            const float* row = logits.row(i);
            out.push_back(static_cast<int>(
                std::max_element(row, row + logits.cols) - row));
        }
    }
    return out;
}

int64_t Model::head_parameter_count() const {
    return static_cast<int64_t>(pre_w_.size() + pre_b_.size() + out_w_.size() + out_b_.size());
}

void Model::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    auto& self = const_cast<Model&>(*this);
    const auto views = self.params();

    nlohmann::json sidecar;
    sidecar["format"] = "framebench-checkpoint";
    sidecar["version"] = 1;
    sidecar["spec_key"] = spec_.key;
    sidecar["pretrained_id"] = spec_.pretrained_id;
    sidecar["num_classes"] = num_classes();
    sidecar["label_order"] = label_order_;
    sidecar["pooling"] = pooling_;
    sidecar["max_length"] = tokenizer_.max_length();
    sidecar["vocab_size"] = tokenizer_.vocab_size();
    sidecar["hidden_dim"] = spec_.hidden_dim;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& p : views) {
        tensors.push_back({{"name", p.name}, {"size", p.value.size()}});
    }
    sidecar["tensors"] = tensors;

    std::ofstream meta(std::filesystem::path(dir) / "model.json", std::ios::binary);
    if (!meta) throw IoError("cannot write model.json under '" + dir + "'");
    meta << sidecar.dump(2) << "\n";

    std::ofstream bin(std::filesystem::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw IoError("cannot write weights.bin under '" + dir + "'");
    bin.write(kWeightsMagic, sizeof(kWeightsMagic));
    uint64_t total = 0;
    for (const auto& p : views) total += p.value.size();
    bin.write(reinterpret_cast<const char*>(&total), sizeof(total));
    for (const auto& p : views) {
        bin.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    }
    if (!bin) throw IoError("write failed for weights.bin under '" + dir + "'");
}

Model Model::load(const std::string& dir) {
    std::ifstream meta(std::filesystem::path(dir) / "model.json", std::ios::binary);
    if (!meta) throw CheckpointError("no model.json under '" + dir + "'");
    nlohmann::json sidecar;
    try {
        meta >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(dir + ": invalid model.json: " + e.what());
    }

    const auto key = sidecar.at("spec_key").get<std::string>();
    const auto spec = find_spec(key);
    if (!spec) throw CheckpointError("checkpoint names unknown backbone '" + key + "'");

    ModelOptions opts;
    opts.label_order = sidecar.at("label_order").get<std::vector<std::string>>();
    opts.max_length = sidecar.at("max_length").get<int>();
    opts.vocab_size = sidecar.at("vocab_size").get<size_t>();
    if (sidecar.at("hidden_dim").get<int>() != spec->hidden_dim) {
        throw CheckpointError("checkpoint hidden_dim does not match backbone '" + key + "'");
    }

    Model model(*spec, opts);
    std::ifstream bin(std::filesystem::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw CheckpointError("no weights.bin under '" + dir + "'");
    char magic[sizeof(kWeightsMagic)];
    bin.read(magic, sizeof(magic));
    if (!bin || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
        throw CheckpointError(dir + ": weights.bin has a bad magic header");
    }
    uint64_t total = 0;
    bin.read(reinterpret_cast<char*>(&total), sizeof(total));

    uint64_t expected = 0;
    for (const auto& p : model.params()) expected += p.value.size();
    if (total != expected) {
        throw CheckpointError(dir + ": weights.bin holds " + std::to_string(total) +
                              " floats, model needs " + std::to_string(expected));
    }
    for (auto& p : model.params()) {
        bin.read(reinterpret_cast<char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    }
    if (!bin) throw CheckpointError(dir + ": weights.bin is truncated");
    return model;
}

}  // namespace framebench
