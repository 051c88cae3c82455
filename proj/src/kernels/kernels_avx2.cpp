// AVX2 kernel variants. Compiled with -mavx2 only on x86-64; callers reach
// them through the dispatch table after a cpuid check.
//
// Reductions keep four running lanes and fold them pairwise at the end, so
// they reassociate relative to the scalar reference. Elementwise kernels and
// weighted_row_sum use multiply-then-add per coordinate in the same order as
// the reference and match it bit for bit (FMA is deliberately not used).

#if !defined(__AVX2__)
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif

#include <immintrin.h>

#include "mrmn/kernels.hpp"

namespace mrmn::kernels {

namespace {

inline double fold4(__m256d acc) {
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = _mm256_add_pd(acc, prod);
    }
    double sum = fold4(acc);
    for (; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double sum = fold4(acc);
    for (; k < n; ++k) {
        double d = a[k] - b[k];
        sum += d * d;
    }
    return sum;
}

double translated_squared_distance_avx2(const double* u, const double* r, const double* i,
                                        std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d t = _mm256_add_pd(_mm256_loadu_pd(u + k), _mm256_loadu_pd(r + k));
        __m256d d = _mm256_sub_pd(t, _mm256_loadu_pd(i + k));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double sum = fold4(acc);
    for (; k < n; ++k) {
        double d = (u[k] + r[k]) - i[k];
        sum += d * d;
    }
    return sum;
}

double squared_norm_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d x = _mm256_loadu_pd(a + k);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(x, x));
    }
    double sum = fold4(acc);
    for (; k < n; ++k) sum += a[k] * a[k];
    return sum;
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
    }
    for (; k < n; ++k) out[k] = a[k] * b[k];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
        _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), prod));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void scale_avx2(double* x, double alpha, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(x + k, _mm256_mul_pd(_mm256_loadu_pd(x + k), va));
    }
    for (; k < n; ++k) x[k] *= alpha;
}

void weighted_row_sum_avx2(const double* weights, const double* rows, std::size_t n_rows,
                           std::size_t dim, double* out) {
    std::size_t k = 0;
    for (; k + 4 <= dim; k += 4) _mm256_storeu_pd(out + k, _mm256_setzero_pd());
    for (; k < dim; ++k) out[k] = 0.0;
    for (std::size_t s = 0; s < n_rows; ++s) {
        axpy_avx2(weights[s], rows + s * dim, out, dim);
    }
}

void row_dots_avx2(const double* v, const double* rows, std::size_t n_rows, std::size_t dim,
                   double* out) {
    for (std::size_t s = 0; s < n_rows; ++s) out[s] = dot_avx2(v, rows + s * dim, dim);
}

constexpr Ops kAvx2Ops = {
    dot_avx2,
    squared_distance_avx2,
    translated_squared_distance_avx2,
    squared_norm_avx2,
    hadamard_avx2,
    axpy_avx2,
    scale_avx2,
    weighted_row_sum_avx2,
    row_dots_avx2,
};

}  // namespace

const Ops& avx2_ops() { return kAvx2Ops; }

}  // namespace mrmn::kernels
