#include "threatnet/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace threatnet::kernels {

namespace {

double scalar_sum(const double* v, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc;
}

double scalar_l1_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d < 0 ? -d : d;
    }
    return acc;
}

void scalar_scale_add(double* dst, const double* src, double alpha, double beta,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * src[i] + beta;
}

const Ops g_scalar{scalar_sum, scalar_l1_diff, scalar_scale_add, "scalar"};

std::atomic<bool> g_force_scalar{false};

bool simd_disabled_by_env() {
    const char* v = std::getenv("THREATNET_NO_SIMD");
    return v != nullptr && v[0] != '\0' && v[0] != '0';
}

} // namespace

const Ops& scalar_ops() { return g_scalar; }

void force_scalar(bool on) { g_force_scalar.store(on); }

const Ops& active() {
    if (g_force_scalar.load()) return g_scalar;
    static const Ops* selected = [] {
        if (simd_disabled_by_env()) return &g_scalar;
        if (const Ops* a = avx2_ops()) return a;
        return &g_scalar;
    }();
    return *selected;
}

} // namespace threatnet::kernels
