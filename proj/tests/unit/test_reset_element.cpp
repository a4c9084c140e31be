#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cglp/error.hpp"
#include "cglp/hybrid_sim.hpp"
#include "cglp/reset_element.hpp"
#include "cglp/spectral.hpp"

using namespace cglp;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// Scalar GFORE closed form: (2 w^2 / (pi (w^2 + a^2))) (1 + E)(1 - g) / (1 + g E), E = exp(-pi a / w).
double gfore_theta(double a, double g, double w) {
    const double E = std::exp(-kPi * a / w);
    return 2.0 * w * w / (kPi * (w * w + a * a)) * (1.0 + E) * (1.0 - g) / (1.0 + g * E);
}

}  // namespace

TEST_CASE("gfore construction") {
    const ResetElement r = make_gfore(hz_to_rad(114.5), 0.2);
    CHECK(r.states() == 1);
    CHECK(r.A()(0, 0) == -hz_to_rad(114.5));
    CHECK(r.C()(0) == hz_to_rad(114.5));
    CHECK(r.D() == 0.0);
    CHECK(r.reset_values()(0) == 0.2);
    CHECK(r.hurwitz());
    CHECK_FALSE(r.is_linear());
    CHECK(make_gfore(10.0, 1.0).is_linear());
    CHECK(make_gfore(10.0, 0.0).reset_values()(0) == 0.0);
    CHECK_THROWS_AS(make_gfore(10.0, -1.0), InvalidParameter);
    CHECK_THROWS_AS(make_gfore(10.0, 1.5), InvalidParameter);
    CHECK_THROWS_AS(make_gfore(-10.0, 0.5), InvalidParameter);
}

TEST_CASE("gfore corner rule") {
    CHECK(gfore_corner_from_target(100.0, 1.0) == doctest::Approx(100.0));
    CHECK(theta_d_infinity(0.0) == doctest::Approx(4.0 / kPi));
    CHECK(gfore_corner_from_target(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(1.0 + 16.0 / (kPi * kPi))));
    CHECK(gfore_corner_from_target(1.0, 0.0) == doctest::Approx(0.6178).epsilon(1e-4));
    CHECK(rad_to_hz(gfore_corner_from_target(hz_to_rad(150.0), 0.2)) == doctest::Approx(114.4).epsilon(1e-3));
    CHECK_THROWS_AS(theta_d_infinity(-1.0), InvalidParameter);
    CHECK_THROWS_AS(gfore_corner_from_target(0.0, 0.2), InvalidParameter);
}

TEST_CASE("base linear transfer function") {
    const double a = 300.0;
    const RationalTF tf = base_linear_tf(make_gfore(a, 0.2));
    for (double w : {1.0, 100.0, 1e4}) {
        CHECK(std::abs(tf.eval(w) - 1.0 / cplx(1.0, w / a)) < 1e-14);
    }
    const ResetElement d(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::RowVectorXd(0), 2.5, Eigen::VectorXd(0));
    CHECK(base_linear_tf(d) == RationalTF::gain(2.5));

    Eigen::MatrixXd A(2, 2);
    A << -10.0, 0.0, 0.0, -40.0;
    Eigen::RowVectorXd C(2);
    C << 10.0, 40.0;
    const ResetElement two(A, Eigen::VectorXd::Ones(2), C, 0.0, Eigen::VectorXd::Constant(2, 0.5));
    const RationalTF sum = base_linear_tf(two);
    for (double w : {1.0, 25.0, 300.0}) {
        CHECK(std::abs(sum.eval(w) - (1.0 / cplx(1.0, w / 10.0) + 1.0 / cplx(1.0, w / 40.0))) < 1e-13);
    }
}

TEST_CASE("theta_d scalar closed form") {
    for (double g : {-0.5, 0.0, 0.2, 0.5, 1.0}) {
        for (double w : {10.0, hz_to_rad(150.0), 1e4}) {
            const double a = hz_to_rad(114.5);
            CHECK(theta_d(make_gfore(a, g), w)(0, 0) == doctest::Approx(gfore_theta(a, g, w)).epsilon(1e-12));
        }
    }
    const double v = theta_d(make_gfore(hz_to_rad(114.5), 0.2), hz_to_rad(150.0))(0, 0);
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
    CHECK(theta_d(make_gfore(10.0, 1.0), 7.0)(0, 0) == 0.0);
    CHECK(theta_d(make_gfore(1.0, 0.2), 1e7)(0, 0) == doctest::Approx(theta_d_infinity(0.2)).epsilon(1e-6));
    CHECK_THROWS_AS(theta_d(make_gfore(1.0, 0.2), 0.0), InvalidParameter);
}

TEST_CASE("even harmonics vanish") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.9, 1.0);
    std::uniform_real_distribution<double> lw(0.0, 10.0);
    for (int i = 0; i < 50; ++i) {
        const ResetElement r = make_gfore(std::exp(lw(rng)), u(rng));
        const double w = std::exp(lw(rng));
        for (int n : {2, 4, 6, 8}) CHECK(hosidf(r, w, n).value == cplx(0.0, 0.0));
    }
}

TEST_CASE("linear limit") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lw(0.0, 10.0);
    const ResetElement r = make_gfore(500.0, 1.0);
    const RationalTF bl = base_linear_tf(r);
    for (int i = 0; i < 50; ++i) {
        const double w = std::exp(lw(rng));
        CHECK(theta_d(r, w)(0, 0) == 0.0);
        CHECK(std::abs(hosidf(r, w, 1).value - bl.eval(w)) <= 1e-12 * std::abs(bl.eval(w)));
        CHECK(hosidf(r, w, 3).value == cplx(0.0, 0.0));
    }
}

TEST_CASE("first harmonic asymptotes") {
    const ResetElement r = make_gfore(hz_to_rad(114.5), 0.2);
    CHECK(std::abs(hosidf(r, hz_to_rad(0.01), 1).value) == doctest::Approx(1.0).epsilon(1e-3));
    // Top decade of the standard grid: -20 dB/decade within 0.5 dB.
    const double slope = 20.0 * std::log10(std::abs(hosidf(r, hz_to_rad(1e4), 1).value) /
                                           std::abs(hosidf(r, hz_to_rad(1e3), 1).value));
    CHECK(slope == doctest::Approx(-20.0).epsilon(0.025));
}

TEST_CASE("series shares one theta evaluation") {
    const ResetElement r = make_gfore(hz_to_rad(114.5), 0.2);
    const auto s = hosidf_series(r, hz_to_rad(40.0));
    REQUIRE(s.size() == static_cast<std::size_t>(kDefaultMaxHarmonic));
    for (const auto& h : s) CHECK(h.value == hosidf(r, hz_to_rad(40.0), h.order).value);
}

TEST_CASE("describing function matches a simulated reset element") {
    const ResetElement r = make_gfore(hz_to_rad(114.5), 0.2);
    const double f = 40.0;
    const std::size_t per = 5000, periods = 30;
    const double fs = f * static_cast<double>(per);
    std::vector<double> u(per * periods);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::sin(2.0 * kPi * f * static_cast<double>(k) / fs);
    const auto y = simulate_reset_element(r, u, fs);
    const std::size_t start = per * 20;
    const auto tail = std::span<const double>(y).subspan(start);
    for (int n : {1, 3, 5}) {
        const auto est = extract_harmonic(tail, fs, f, n, static_cast<double>(start) / fs);
        const cplx pred = hosidf(r, hz_to_rad(f), n).value;
        CAPTURE(n);
        CHECK(std::abs(est.amplitude - pred) / std::abs(pred) < (n == 1 ? 0.02 : 0.05));
    }
}
