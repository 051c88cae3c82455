// NEON kernel variants for aarch64. Same layout rules as the AVX2 file:
// reductions use two running lanes folded at the end, elementwise kernels
// mirror the scalar reference order exactly (multiply then add, no FMA).

#if !defined(__aarch64__)
#error "kernels_neon.cpp is aarch64-only"
#endif

#include <arm_neon.h>

#include "mrmn/kernels.hpp"

namespace mrmn::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k));
        acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; k < n; ++k) {
        double d = a[k] - b[k];
        sum += d * d;
    }
    return sum;
}

double translated_squared_distance_neon(const double* u, const double* r, const double* i,
                                        std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        float64x2_t t = vaddq_f64(vld1q_f64(u + k), vld1q_f64(r + k));
        float64x2_t d = vsubq_f64(t, vld1q_f64(i + k));
        acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; k < n; ++k) {
        double d = (u[k] + r[k]) - i[k];
        sum += d * d;
    }
    return sum;
}

double squared_norm_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        float64x2_t x = vld1q_f64(a + k);
        acc = vaddq_f64(acc, vmulq_f64(x, x));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; k < n; ++k) sum += a[k] * a[k];
    return sum;
}

void hadamard_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(out + k, vmulq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
    }
    for (; k < n; ++k) out[k] = a[k] * b[k];
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        float64x2_t prod = vmulq_f64(va, vld1q_f64(x + k));
        vst1q_f64(y + k, vaddq_f64(vld1q_f64(y + k), prod));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void scale_neon(double* x, double alpha, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(x + k, vmulq_f64(vld1q_f64(x + k), va));
    }
    for (; k < n; ++k) x[k] *= alpha;
}

void weighted_row_sum_neon(const double* weights, const double* rows, std::size_t n_rows,
                           std::size_t dim, double* out) {
    for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
    for (std::size_t s = 0; s < n_rows; ++s) {
        axpy_neon(weights[s], rows + s * dim, out, dim);
    }
}

void row_dots_neon(const double* v, const double* rows, std::size_t n_rows, std::size_t dim,
                   double* out) {
    for (std::size_t s = 0; s < n_rows; ++s) out[s] = dot_neon(v, rows + s * dim, dim);
}

constexpr Ops kNeonOps = {
    dot_neon,
    squared_distance_neon,
    translated_squared_distance_neon,
    squared_norm_neon,
    hadamard_neon,
    axpy_neon,
    scale_neon,
    weighted_row_sum_neon,
    row_dots_neon,
};

}  // namespace

const Ops& neon_ops() { return kNeonOps; }

}  // namespace mrmn::kernels
