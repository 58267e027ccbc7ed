#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "threatnet/kernels.hpp"

using namespace threatnet;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("scalar kernels compute the obvious results") {
    const auto& ops = kernels::scalar_ops();
    std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> b{1.0, 1.0, 1.0, 1.0, 1.0};
    CHECK(ops.sum(a.data(), a.size()) == doctest::Approx(15.0));
    CHECK(ops.l1_diff(a.data(), b.data(), a.size()) == doctest::Approx(10.0));
    std::vector<double> dst(a.size());
    ops.scale_add(dst.data(), a.data(), 2.0, 0.5, a.size());
    CHECK(dst[0] == doctest::Approx(2.5));
    CHECK(dst[4] == doctest::Approx(10.5));
}

TEST_CASE("simd variants match the scalar reference") {
    const auto* avx2 = kernels::avx2_ops();
    if (avx2 == nullptr) {
        MESSAGE("AVX2 unavailable on this host; dispatch falls back to scalar");
        CHECK(std::string(kernels::active().name) == "scalar");
        return;
    }
    const auto& scalar = kernels::scalar_ops();
    std::mt19937_64 rng(20240517);
    // Cover remainder handling: lengths around the 4-lane width.
    for (size_t n : {size_t{0}, size_t{1}, size_t{2}, size_t{3}, size_t{4}, size_t{5},
                     size_t{7}, size_t{8}, size_t{63}, size_t{64}, size_t{1001}}) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);
        CHECK(avx2->sum(a.data(), n) ==
              doctest::Approx(scalar.sum(a.data(), n)).epsilon(1e-12));
        CHECK(avx2->l1_diff(a.data(), b.data(), n) ==
              doctest::Approx(scalar.l1_diff(a.data(), b.data(), n)).epsilon(1e-12));
        std::vector<double> d1(n), d2(n);
        avx2->scale_add(d1.data(), a.data(), 0.85, 0.003, n);
        scalar.scale_add(d2.data(), a.data(), 0.85, 0.003, n);
        for (size_t i = 0; i < n; ++i)
            CHECK(d1[i] == doctest::Approx(d2[i]).epsilon(1e-15));
    }
}

TEST_CASE("force_scalar overrides dispatch") {
    kernels::force_scalar(true);
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::force_scalar(false);
}
