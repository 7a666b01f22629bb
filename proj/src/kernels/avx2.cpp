#include <cmath>
#include <cstdint>

#include "framebench/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define FRAMEBENCH_X86 1
#include <immintrin.h>
#else
#define FRAMEBENCH_X86 0
#endif

// AVX2 variants. Per-function target attributes keep the translation unit
// buildable without -mavx2; dispatch.cpp gates selection on cpuid.
//
// Elementwise kernels mirror the scalar reference operation-for-operation
// (multiply then add, never FMA) so results are bit-exact. FMA is used only
// inside reductions and matrix products, which are tolerance-tested.

namespace framebench::kernels {

#if FRAMEBENCH_X86

namespace {

#define FB_AVX2 __attribute__((target("avx2,fma,f16c")))

FB_AVX2 inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

FB_AVX2 float dot_avx2(const float* a, const float* b, size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    }
    float sum = hsum8(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

FB_AVX2 double sumsq_avx2(const float* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_add_pd(lo, hi);
    double sum = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        sum += v * v;
    }
    return sum;
}

FB_AVX2 void gemm_nt_avx2(const float* a, const float* b, const float* bias, float* y,
                          size_t m, size_t n, size_t k) {
    for (size_t i = 0; i < m; ++i) {
        const float* ai = a + i * k;
        for (size_t j = 0; j < n; ++j) {
            const float acc = dot_avx2(ai, b + j * k, k);
            y[i * n + j] = bias ? acc + bias[j] : acc;
        }
    }
}

FB_AVX2 inline void row_axpy_fma(float alpha, const float* x, float* y, size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        _mm256_storeu_ps(y + j, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + j),
                                                _mm256_loadu_ps(y + j)));
    }
    for (; j < n; ++j) y[j] += alpha * x[j];
}

FB_AVX2 void gemm_nn_acc_avx2(const float* a, const float* b, float* y,
                              size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        float* yi = y + i * n;
        for (size_t l = 0; l < k; ++l) row_axpy_fma(a[i * k + l], b + l * n, yi, n);
    }
}

FB_AVX2 void gemm_tn_acc_avx2(const float* a, const float* b, float* y,
                              size_t m, size_t k, size_t n) {
    for (size_t r = 0; r < m; ++r) {
        const float* br = b + r * n;
        for (size_t l = 0; l < k; ++l) row_axpy_fma(a[r * k + l], br, y + l * n, n);
    }
}

FB_AVX2 void axpy_avx2(float alpha, const float* x, float* y, size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

FB_AVX2 void scale_avx2(float alpha, float* x, size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

FB_AVX2 void relu_avx2(const float* x, float* y, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

FB_AVX2 void relu_backward_avx2(const float* x, const float* dy, float* dx, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(dx + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

FB_AVX2 void adamw_step_avx2(float* p, const float* g, float* m, float* v, size_t n,
                             const AdamwScalars& s) {
    const __m256 beta1 = _mm256_set1_ps(s.beta1);
    const __m256 beta2 = _mm256_set1_ps(s.beta2);
    const __m256 omb1 = _mm256_set1_ps(s.one_minus_beta1);
    const __m256 omb2 = _mm256_set1_ps(s.one_minus_beta2);
    const __m256 ib1 = _mm256_set1_ps(s.inv_bias1);
    const __m256 ib2 = _mm256_set1_ps(s.inv_bias2);
    const __m256 eps = _mm256_set1_ps(s.eps);
    const __m256 wd = _mm256_set1_ps(s.weight_decay);
    const __m256 lr = _mm256_set1_ps(s.lr);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 gi = _mm256_loadu_ps(g + i);
        const __m256 mi =
            _mm256_add_ps(_mm256_mul_ps(beta1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, gi));
        const __m256 gg = _mm256_mul_ps(gi, gi);
        const __m256 vi =
            _mm256_add_ps(_mm256_mul_ps(beta2, _mm256_loadu_ps(v + i)), _mm256_mul_ps(omb2, gg));
        _mm256_storeu_ps(m + i, mi);
        _mm256_storeu_ps(v + i, vi);
        const __m256 m_hat = _mm256_mul_ps(mi, ib1);
        const __m256 v_hat = _mm256_mul_ps(vi, ib2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps);
        const __m256 pi = _mm256_loadu_ps(p + i);
        const __m256 update = _mm256_add_ps(_mm256_div_ps(m_hat, denom), _mm256_mul_ps(wd, pi));
        _mm256_storeu_ps(p + i, _mm256_sub_ps(pi, _mm256_mul_ps(lr, update)));
    }
    for (; i < n; ++i) {
        const float gi = g[i];
        const float mi = s.beta1 * m[i] + s.one_minus_beta1 * gi;
        const float vi = s.beta2 * v[i] + s.one_minus_beta2 * (gi * gi);
        m[i] = mi;
        v[i] = vi;
        const float m_hat = mi * s.inv_bias1;
        const float v_hat = vi * s.inv_bias2;
        const float update = m_hat / (std::sqrt(v_hat) + s.eps) + s.weight_decay * p[i];
        p[i] = p[i] - s.lr * update;
    }
}

FB_AVX2 void round_f16_avx2(float* x, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i half =
            _mm256_cvtps_ph(_mm256_loadu_ps(x + i), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
        _mm256_storeu_ps(x + i, _mm256_cvtph_ps(half));
    }
    for (; i < n; ++i) x[i] = detail::f16_to_f32(detail::f32_to_f16(x[i]));
}

#undef FB_AVX2

const Backend avx2_backend{
    "avx2",         gemm_nt_avx2, gemm_nn_acc_avx2, gemm_tn_acc_avx2,
    dot_avx2,       sumsq_avx2,   axpy_avx2,        scale_avx2,
    relu_avx2,      relu_backward_avx2,             adamw_step_avx2,
    round_f16_avx2,
};

bool avx2_supported() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
           __builtin_cpu_supports("f16c");
}

}  // namespace

const Backend* avx2() {
    static const Backend* backend = avx2_supported() ? &avx2_backend : nullptr;
    return backend;
}

#else  // !FRAMEBENCH_X86

const Backend* avx2() { return nullptr; }

#endif

}  // namespace framebench::kernels
