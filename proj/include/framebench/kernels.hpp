#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace framebench::kernels {

// Scalars for one decoupled-weight-decay adaptive-moment update, precomputed
// once per optimizer step so the per-element kernel stays branch-free.
struct AdamwScalars {
    float lr;
    float beta1;
    float beta2;
    float one_minus_beta1;
    float one_minus_beta2;
    float inv_bias1;  // 1 / (1 - beta1^t)
    float inv_bias2;  // 1 / (1 - beta2^t)
    float eps;
    float weight_decay;
};

// One dispatchable kernel set. All matrices are row-major, unaligned.
//
// Equivalence contract between backends:
//   - elementwise kernels (axpy, scale, relu*, adamw_step, round_f16) must be
//     bit-exact against the scalar reference;
//   - reductions and matrix products (dot, sumsq, gemm_*) may differ by
//     accumulation order and are tolerance-tested.
struct Backend {
    const char* name;

    // y(m x n) = a(m x k) * b(n x k)^T (+ bias(n) when non-null)
    void (*gemm_nt)(const float* a, const float* b, const float* bias, float* y,
                    size_t m, size_t n, size_t k);
    // y(m x n) += a(m x k) * b(k x n)
    void (*gemm_nn_acc)(const float* a, const float* b, float* y,
                        size_t m, size_t k, size_t n);
    // y(k x n) += a(m x k)^T * b(m x n)
    void (*gemm_tn_acc)(const float* a, const float* b, float* y,
                        size_t m, size_t k, size_t n);

    float (*dot)(const float* a, const float* b, size_t n);
    double (*sumsq)(const float* x, size_t n);

    void (*axpy)(float alpha, const float* x, float* y, size_t n);
    void (*scale)(float alpha, float* x, size_t n);
    void (*relu)(const float* x, float* y, size_t n);
    void (*relu_backward)(const float* x, const float* dy, float* dx, size_t n);
    void (*adamw_step)(float* p, const float* g, float* m, float* v, size_t n,
                       const AdamwScalars& s);
    // Rounds every value through IEEE binary16 (round-to-nearest-even) and
    // back; the reduced-precision training mode inserts this at layer
    // boundaries.
    void (*round_f16)(float* x, size_t n);
};

const Backend& scalar();
// Null when the CPU lacks AVX2/FMA/F16C.
const Backend* avx2();

// Best supported backend, or the one named by FRAMEBENCH_KERNELS
// (scalar | avx2). Resolved once on first call.
const Backend& active();

// Throws ConfigError for unknown or unsupported names.
const Backend& backend_by_name(const std::string& name);

std::vector<std::string> available_backends();

namespace detail {
// Scalar binary16 conversions; the AVX2 kernel tail reuses these so both
// backends round identically.
uint16_t f32_to_f16(float f);
float f16_to_f32(uint16_t h);
}  // namespace detail

}  // namespace framebench::kernels
