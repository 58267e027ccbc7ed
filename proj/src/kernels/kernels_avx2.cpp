// AVX2 variants of the rank-vector primitives. Compiled with -mavx2 (x86-64
// only); selection happens at runtime via __builtin_cpu_supports so the rest
// of the library stays portable.
#include "threatnet/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

namespace threatnet::kernels {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double avx2_sum(const double* v, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += v[i];
    return total;
}

double avx2_l1_diff(const double* a, const double* b, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        total += d < 0 ? -d : d;
    }
    return total;
}

void avx2_scale_add(double* dst, const double* src, double alpha, double beta,
                    std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(src + i);
        _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(va, x, vb));
    }
    for (; i < n; ++i) dst[i] = alpha * src[i] + beta;
}

const Ops g_avx2{avx2_sum, avx2_l1_diff, avx2_scale_add, "avx2"};

} // namespace

const Ops* avx2_ops() {
    // scale_add uses FMA, which is a distinct CPUID feature.
    return (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
               ? &g_avx2
               : nullptr;
}

} // namespace threatnet::kernels

#else

namespace threatnet::kernels {
const Ops* avx2_ops() { return nullptr; }
} // namespace threatnet::kernels

#endif
