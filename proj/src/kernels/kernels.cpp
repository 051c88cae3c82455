#include "mrmn/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "mrmn/error.hpp"

namespace mrmn::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double d = a[k] - b[k];
        sum += d * d;
    }
    return sum;
}

double translated_squared_distance_scalar(const double* u, const double* r, const double* i,
                                          std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double d = (u[k] + r[k]) - i[k];
        sum += d * d;
    }
    return sum;
}

double squared_norm_scalar(const double* a, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += a[k] * a[k];
    return sum;
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * b[k];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void scale_scalar(double* x, double alpha, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) x[k] *= alpha;
}

void weighted_row_sum_scalar(const double* weights, const double* rows, std::size_t n_rows,
                             std::size_t dim, double* out) {
    for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
    for (std::size_t s = 0; s < n_rows; ++s) {
        const double w = weights[s];
        const double* row = rows + s * dim;
        for (std::size_t k = 0; k < dim; ++k) out[k] += w * row[k];
    }
}

void row_dots_scalar(const double* v, const double* rows, std::size_t n_rows, std::size_t dim,
                     double* out) {
    for (std::size_t s = 0; s < n_rows; ++s) out[s] = dot_scalar(v, rows + s * dim, dim);
}

constexpr Ops kScalarOps = {
    dot_scalar,
    squared_distance_scalar,
    translated_squared_distance_scalar,
    squared_norm_scalar,
    hadamard_scalar,
    axpy_scalar,
    scale_scalar,
    weighted_row_sum_scalar,
    row_dots_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#if defined(MRMN_HAVE_AVX2_BUILD)
const Ops& avx2_ops();  // defined in kernels_avx2.cpp
#endif
#if defined(MRMN_HAVE_NEON_BUILD)
const Ops& neon_ops();  // defined in kernels_neon.cpp
#endif

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

namespace {

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(MRMN_HAVE_AVX2_BUILD)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case Isa::neon:
#if defined(MRMN_HAVE_NEON_BUILD)
            return true;  // NEON is baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() {
    if (const char* env = std::getenv("MRMN_KERNELS")) {
        std::string want(env);
        Isa isa = Isa::scalar;
        if (want == "scalar") {
            isa = Isa::scalar;
        } else if (want == "avx2") {
            isa = Isa::avx2;
        } else if (want == "neon") {
            isa = Isa::neon;
        } else {
            throw Error("MRMN_KERNELS: unknown kernel variant '" + want + "'");
        }
        if (!isa_supported(isa))
            throw Error(std::string("MRMN_KERNELS: variant '") + isa_name(isa) +
                        "' is not available on this machine");
        return isa;
    }
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

// Lazy so a bad MRMN_KERNELS value throws at first use, not in static init.
Isa& active_isa_slot() {
    static Isa isa = detect_isa();
    return isa;
}

}  // namespace

const Ops* ops_for(Isa isa) {
    if (!isa_supported(isa)) return nullptr;
    switch (isa) {
        case Isa::scalar:
            return &kScalarOps;
        case Isa::avx2:
#if defined(MRMN_HAVE_AVX2_BUILD)
            return &avx2_ops();
#else
            return nullptr;
#endif
        case Isa::neon:
#if defined(MRMN_HAVE_NEON_BUILD)
            return &neon_ops();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const Ops& active() { return *ops_for(active_isa_slot()); }

Isa active_isa() { return active_isa_slot(); }

void force_isa(Isa isa) {
    if (!isa_supported(isa))
        throw Error(std::string("kernel variant '") + isa_name(isa) +
                    "' is not available on this machine");
    active_isa_slot() = isa;
}

}  // namespace mrmn::kernels
