#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cglp/kernels.hpp"

using namespace cglp::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool close(double a, double b, double rel = 1e-12) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("scalar kernels on small hand cases") {
    const auto& k = scalar();
    const std::vector<double> x{1.0, 2.0, 3.0};
    CHECK(k.sum_squares(x) == 14.0);
    double a = 0, b = 0;
    k.dot2(x, std::vector<double>{1, 1, 1}, std::vector<double>{0, 1, 0}, &a, &b);
    CHECK(a == 6.0);
    CHECK(b == 2.0);
    std::vector<double> out(3);
    k.window_demean(x, 2.0, std::vector<double>{1, 2, 3}, out);
    CHECK(out == std::vector<double>{-1.0, 0.0, 3.0});
    std::vector<double> acc{1.0, 0.0};
    k.accumulate_power(std::vector<std::complex<double>>{{3, 4}, {0, 1}}, acc);
    CHECK(acc == std::vector<double>{26.0, 1.0});
    // 1 + 2s + s^2 at s = j: 1 + 2j - 1 = 2j
    std::vector<std::complex<double>> p(1);
    k.eval_poly_jw(std::vector<double>{1, 2, 1}, std::vector<double>{1.0}, p);
    CHECK(p[0] == std::complex<double>(0.0, 2.0));
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    const KernelTable* v = avx2();
    if (v == nullptr) {
        MESSAGE("AVX2 variant unavailable on this machine; equivalence not exercised");
        return;
    }
    const auto& s = scalar();
    // Lengths straddle the vector width to cover the remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 1000u, 4099u}) {
        CAPTURE(n);
        const auto x = random_vec(n, 1 + n);
        const auto a = random_vec(n, 2 + n);
        const auto b = random_vec(n, 3 + n);
        CHECK(close(v->sum_squares(x), s.sum_squares(x)));

        double va, vb, sa, sb;
        v->dot2(x, a, b, &va, &vb);
        s.dot2(x, a, b, &sa, &sb);
        CHECK(close(va, sa));
        CHECK(close(vb, sb));

        std::vector<double> vo(n), so(n);
        v->window_demean(x, 0.3, a, vo);
        s.window_demean(x, 0.3, a, so);
        CHECK(vo == so);

        std::vector<std::complex<double>> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = {x[i], a[i]};
        std::vector<double> vacc(b), sacc(b);
        v->accumulate_power(z, vacc);
        s.accumulate_power(z, sacc);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(vacc[i], sacc[i]));

        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(0.01 * static_cast<double>(i));
        const std::vector<double> coeffs{3.0, -1.0, 0.5, 1e-3, 2e-6};
        std::vector<std::complex<double>> vp(n), sp(n);
        v->eval_poly_jw(coeffs, w, vp);
        s.eval_poly_jw(coeffs, w, sp);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(close(vp[i].real(), sp[i].real(), 1e-12));
            CHECK(close(vp[i].imag(), sp[i].imag(), 1e-12));
        }
    }
}

TEST_CASE("active table is one of the two") {
    const auto& a = active();
    CHECK((&a == &scalar() || &a == avx2()));
}
