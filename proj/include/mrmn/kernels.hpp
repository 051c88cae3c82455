#pragma once

// Arithmetic inner loops behind the model: dot products, Hadamard products,
// translated squared distances, axpy-style row updates, and attention reads.
// Every kernel exists as a scalar reference implementation plus SIMD variants
// (AVX2 on x86-64, NEON on aarch64) selected once per process at first use.
//
// Contracts the rest of the engine relies on:
//  - Elementwise kernels (hadamard, axpy, scale) and weighted_row_sum produce
//    bit-identical results across all variants: per-coordinate operations are
//    a multiply followed by an add in the same order, never an FMA.
//  - Reduction kernels (dot, squared_*) may reassociate the sum, so variants
//    agree only to rounding; the equivalence tests pin the tolerance.
//  - Within one process the selected variant never changes, so end-to-end
//    runs stay bit-reproducible.
//
// Selection order: MRMN_KERNELS environment variable ("scalar", "avx2",
// "neon") if set, otherwise the best variant the CPU supports.

#include <cstddef>

namespace mrmn::kernels {

enum class Isa { scalar, avx2, neon };

const char* isa_name(Isa isa);

struct Ops {
    // sum_k a[k] * b[k]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_k (a[k] - b[k])^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // sum_k ((u[k] + r[k]) - i[k])^2, the translation score
    double (*translated_squared_distance)(const double* u, const double* r, const double* i,
                                          std::size_t n);
    // sum_k a[k]^2
    double (*squared_norm)(const double* a, std::size_t n);
    // out[k] = a[k] * b[k]
    void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
    // y[k] += alpha * x[k]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x[k] *= alpha
    void (*scale)(double* x, double alpha, std::size_t n);
    // out[k] = sum_s weights[s] * rows[s*dim + k]; accumulation over s is
    // performed in index order for every variant.
    void (*weighted_row_sum)(const double* weights, const double* rows, std::size_t n_rows,
                             std::size_t dim, double* out);
    // out[s] = dot(v, rows[s*dim .. s*dim+dim)), one logit per row
    void (*row_dots)(const double* v, const double* rows, std::size_t n_rows, std::size_t dim,
                     double* out);
};

// Kernel table for the variant active in this process.
const Ops& active();

// The scalar reference table, always available; oracles test against it.
const Ops& scalar_ops();

// Table for a specific variant, or nullptr when not built/supported here.
const Ops* ops_for(Isa isa);

Isa active_isa();

// Test hook: pin the active variant. Throws mrmn::Error if unavailable.
void force_isa(Isa isa);

// Convenience forwarders through the active table.
inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return active().squared_distance(a, b, n);
}
inline double translated_squared_distance(const double* u, const double* r, const double* i,
                                          std::size_t n) {
    return active().translated_squared_distance(u, r, i, n);
}
inline double squared_norm(const double* a, std::size_t n) {
    return active().squared_norm(a, n);
}
inline void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    active().hadamard(a, b, out, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void scale(double* x, double alpha, std::size_t n) {
    active().scale(x, alpha, n);
}
inline void weighted_row_sum(const double* weights, const double* rows, std::size_t n_rows,
                             std::size_t dim, double* out) {
    active().weighted_row_sum(weights, rows, n_rows, dim, out);
}
inline void row_dots(const double* v, const double* rows, std::size_t n_rows, std::size_t dim,
                     double* out) {
    active().row_dots(v, rows, n_rows, dim, out);
}

}  // namespace mrmn::kernels
