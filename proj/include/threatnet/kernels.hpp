#pragma once

#include <cstddef>

// Vector primitives used by the rank-vector arithmetic. Each operation has a
// scalar reference implementation and, on x86-64 hosts with AVX2, a vectorized
// variant selected once at startup. The two are equivalence-tested against
// each other; everything downstream goes through active().
namespace threatnet::kernels {

struct Ops {
    // sum of v[0..n)
    double (*sum)(const double* v, std::size_t n);
    // sum of |a[i] - b[i]|
    double (*l1_diff)(const double* a, const double* b, std::size_t n);
    // dst[i] = alpha * src[i] + beta
    void (*scale_add)(double* dst, const double* src, double alpha, double beta,
                      std::size_t n);
    const char* name;
};

/// Scalar reference implementations.
const Ops& scalar_ops();

/// AVX2 implementations, or nullptr if unavailable on this host/build.
const Ops* avx2_ops();

/// The runtime-selected implementation. Honors THREATNET_NO_SIMD=1 and
/// force_scalar().
const Ops& active();

/// Force the scalar path regardless of CPU support (used by tests).
void force_scalar(bool on);

} // namespace threatnet::kernels
