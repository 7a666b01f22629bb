#include <bit>
#include <cmath>
#include <cstdint>

#include "framebench/kernels.hpp"

// Reference kernels. Plain loops, no SIMD, no FMA contraction (the build sets
// -ffp-contract=off); these define the numeric behavior the AVX2 backend is
// tested against.

namespace framebench::kernels {
namespace detail {

uint16_t f32_to_f16(float f) {
    const uint32_t bits = std::bit_cast<uint32_t>(f);
    const uint16_t sign = static_cast<uint16_t>((bits >> 16) & 0x8000u);
    const uint32_t exp = (bits >> 23) & 0xffu;
    uint32_t mant = bits & 0x7fffffu;

    if (exp == 0xffu) {  // inf or nan; keep nan quiet with a payload bit
        if (mant == 0) return sign | 0x7c00u;
        return static_cast<uint16_t>(sign | 0x7e00u | (mant >> 13));
    }

    const int he = static_cast<int>(exp) - 127 + 15;
    if (he >= 0x1f) return sign | 0x7c00u;  // overflow to infinity
    if (he <= 0) {
        if (he < -10) return sign;  // underflow to signed zero
        mant |= 0x800000u;
        const int shift = 14 - he;  // in [14, 24]
        uint32_t half = mant >> shift;
        const uint32_t rem = mant & ((1u << shift) - 1);
        const uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
        return static_cast<uint16_t>(sign | half);
    }

    uint32_t half = (static_cast<uint32_t>(he) << 10) | (mant >> 13);
    const uint32_t rem = mant & 0x1fffu;
    // Round to nearest even; a carry may push into the exponent and, at the
    // top of the range, correctly produce infinity.
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
    return static_cast<uint16_t>(sign | half);
}

float f16_to_f32(uint16_t h) {
    const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
    const uint32_t exp = (h >> 10) & 0x1fu;
    uint32_t mant = h & 0x3ffu;

    if (exp == 0) {
        if (mant == 0) return std::bit_cast<float>(sign);
        // Subnormal half: mant * 2^-24. Normalizing by e left-shifts gives
        // 1.f * 2^(-14 - e), so the float exponent field is 113 - e.
        int e = 0;
        while (!(mant & 0x400u)) {
            mant <<= 1;
            ++e;
        }
        const uint32_t exp32 = static_cast<uint32_t>(113 - e);
        return std::bit_cast<float>(sign | (exp32 << 23) | ((mant & 0x3ffu) << 13));
    }
    if (exp == 0x1fu) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
    return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

}  // namespace detail

namespace {

void gemm_nt_scalar(const float* a, const float* b, const float* bias, float* y,
                    size_t m, size_t n, size_t k) {
    for (size_t i = 0; i < m; ++i) {
        const float* ai = a + i * k;
        for (size_t j = 0; j < n; ++j) {
            const float* bj = b + j * k;
            float acc = 0.0f;
            for (size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            y[i * n + j] = bias ? acc + bias[j] : acc;
        }
    }
}

void gemm_nn_acc_scalar(const float* a, const float* b, float* y,
                        size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        float* yi = y + i * n;
        for (size_t l = 0; l < k; ++l) {
            const float alpha = a[i * k + l];
            const float* bl = b + l * n;
            for (size_t j = 0; j < n; ++j) yi[j] += alpha * bl[j];
        }
    }
}

void gemm_tn_acc_scalar(const float* a, const float* b, float* y,
                        size_t m, size_t k, size_t n) {
    for (size_t r = 0; r < m; ++r) {
        const float* br = b + r * n;
        for (size_t l = 0; l < k; ++l) {
            const float alpha = a[r * k + l];
            float* yl = y + l * n;
            for (size_t j = 0; j < n; ++j) yl[j] += alpha * br[j];
        }
    }
}

float dot_scalar(const float* a, const float* b, size_t n) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sumsq_scalar(const float* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        acc += v * v;
    }
    return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(float alpha, float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void relu_scalar(const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward_scalar(const float* x, const float* dy, float* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void adamw_step_scalar(float* p, const float* g, float* m, float* v, size_t n,
                       const AdamwScalars& s) {
    for (size_t i = 0; i < n; ++i) {
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

void round_f16_scalar(float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] = detail::f16_to_f32(detail::f32_to_f16(x[i]));
}

}  // namespace

const Backend& scalar() {
    static const Backend backend{
        "scalar",         gemm_nt_scalar, gemm_nn_acc_scalar, gemm_tn_acc_scalar,
        dot_scalar,       sumsq_scalar,   axpy_scalar,        scale_scalar,
        relu_scalar,      relu_backward_scalar,               adamw_step_scalar,
        round_f16_scalar,
    };
    return backend;
}

}  // namespace framebench::kernels
