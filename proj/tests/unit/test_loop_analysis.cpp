#include <doctest.h>

#include <cmath>
#include <random>

#include "cglp/error.hpp"
#include "cglp/loop_analysis.hpp"
#include "cglp/tuning.hpp"

using namespace cglp;
using cplx = std::complex<double>;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

LoopTopology cnl(double wx_hz, bool notch = false) {
    ControllerSpec s = notch ? ControllerSpec::paper_filtered(wx_hz) : ControllerSpec::paper_cglp(wx_hz);
    s.kp = 31.0;
    return build_loop(s, paper_plant());
}

}  // namespace

TEST_CASE("open-loop describing function composition") {
    const LoopTopology loop = cnl(360.0);
    const double w = hz_to_rad(80.0);
    const cplx l1 = loop.plant.eval(w) * loop.post_reset.eval(w) * hosidf(loop.reset, w, 1).value *
                    loop.pre_reset.eval(w);
    CHECK(rel(open_loop_hosidf(loop, w, 1), l1) < 1e-14);
    const cplx c1 = loop.pre_reset.eval(w);
    const cplx l3 = loop.plant.eval(3 * w) * loop.post_reset.eval(3 * w) * hosidf(loop.reset, w, 3).value * c1 *
                    std::polar(1.0, 2.0 * std::arg(c1));
    CHECK(rel(open_loop_hosidf(loop, w, 3), l3) < 1e-14);
    CHECK(open_loop_hosidf(loop, w, 2) == cplx(0.0, 0.0));
    CHECK(sensitivity_hosidf(loop, w, 4) == cplx(0.0, 0.0));

    // With C1 = 1 the rotation factor is 1.
    const LoopTopology plain = cnl(150.0);
    CHECK(rel(open_loop_hosidf(plain, w, 3),
              plain.plant.eval(3 * w) * plain.post_reset.eval(3 * w) * hosidf(plain.reset, w, 3).value) < 1e-14);
}

TEST_CASE("base-linear sensitivity limits and peak") {
    const LoopTopology loop = cnl(150.0);
    CHECK(std::abs(base_linear_sensitivity(loop, hz_to_rad(0.01))) < 1e-3);
    CHECK(std::abs(base_linear_sensitivity(loop, hz_to_rad(1e6)) - 1.0) < 1e-3);

    // |S_bl(j3w)| peaks near w_c / 3.
    double best = 0.0, best_f = 0.0;
    for (double f = 10.0; f < 200.0; f += 0.5) {
        const double v = std::abs(base_linear_sensitivity(loop, hz_to_rad(3.0 * f)));
        if (v > best) {
            best = v;
            best_f = f;
        }
    }
    CHECK(best_f > 35.0);
    CHECK(best_f < 75.0);
}

TEST_CASE("third-order sensitivity factorization") {
    const LoopTopology loop = cnl(360.0);
    for (double f : {20.0, 50.0, 120.0}) {
        const double w = hz_to_rad(f);
        const double lhs = std::abs(sensitivity_hosidf(loop, w, 3));
        const double rhs = std::abs(open_loop_hosidf(loop, w, 3)) * std::abs(base_linear_sensitivity(loop, 3 * w)) *
                           std::abs(sensitivity_hosidf(loop, w, 1));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("linear loop has no higher-order sensitivity") {
    ControllerSpec s = ControllerSpec::paper_linear();
    s.kp = 29.74;
    const LoopTopology loop = build_loop(s, paper_plant());
    const FrequencyGrid grid = FrequencyGrid::standard();
    const HosidfCurve s3 = sensitivity_curve(loop, grid, 3);
    for (const auto& v : s3.values) CHECK(v == cplx(0.0, 0.0));
    const HosidfCurve s1 = sensitivity_curve(loop, grid, 1);
    for (std::size_t i = 0; i < grid.size(); i += 10) {
        CHECK(rel(s1.values[i], base_linear_sensitivity(loop, grid[i])) < 1e-10);
    }
}

TEST_CASE("first-order invariance under split and notch") {
    const FrequencyGrid grid = FrequencyGrid::standard();
    const HosidfCurve ref = sensitivity_curve(cnl(150.0), grid, 1);
    for (double wx : {150.0, 360.0, 1000.0, 3000.0}) {
        for (bool notch : {false, true}) {
            const HosidfCurve c = sensitivity_curve(cnl(wx, notch), grid, 1);
            double worst = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, rel(c.values[i], ref.values[i]));
            CAPTURE(wx);
            CAPTURE(notch);
            CHECK(worst < 1e-10);
        }
    }
}

TEST_CASE("pre/post ratio") {
    const NotchPair n = make_notch(hz_to_rad(50.0), 1.0, 0.4);
    CHECK(prepost_ratio(n.notch, hz_to_rad(50.0), 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(prepost_ratio(RationalTF::unity(), 3.0, 5) == 1.0);
    const double r = prepost_ratio(n.notch, hz_to_rad(50.0), 3);
    CHECK(r == doctest::Approx(0.4 / std::abs(n.notch.eval(hz_to_rad(150.0)))).epsilon(1e-14));
    // Undamped zeros at w_n: the ratio is flagged as infinite, not thrown.
    const RationalTF deep({1.0, 0.0, 1.0}, {1.0, 1.0, 1.0});
    CHECK(std::isinf(prepost_ratio(deep, 1.0 / 3.0, 3)));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lf(std::log(5.0), std::log(500.0));
    const LoopTopology plain = cnl(360.0), filt = cnl(360.0, true);
    for (int i = 0; i < 50; ++i) {
        const double w = hz_to_rad(std::exp(lf(rng)));
        for (int k : {3, 5, 7}) {
            const double full = std::abs(sensitivity_hosidf(filt, w, k)) / std::abs(sensitivity_hosidf(plain, w, k));
            CHECK(full == doctest::Approx(prepost_ratio(n.notch, w, k)).epsilon(1e-9));
        }
    }
}

TEST_CASE("crossover and margin") {
    const auto integrator = [](double w) { return cplx(0.0, -200.0 / w); };
    const CrossoverMargin cm = crossover_and_margin(integrator);
    CHECK(cm.omega_c == doctest::Approx(200.0).epsilon(1e-9));
    CHECK(cm.phase_margin_deg == doctest::Approx(90.0).epsilon(1e-9));
    CHECK_THROWS_AS(crossover_and_margin([](double) { return cplx(0.5, 0.0); }), NumericalError);
    // Two crossings: |L| = 1 at 100 and 1000 rad/s.
    const auto bump = [](double w) { return cplx(w > 100.0 && w < 1000.0 ? 2.0 : 0.5, 0.0); };
    CHECK_THROWS_AS(crossover_and_margin(bump), NumericalError);

    for (const ControllerSpec& s : {ControllerSpec::paper_linear(), ControllerSpec::paper_cglp()}) {
        const CrossoverMargin m = crossover_and_margin(build_loop(s, paper_plant()));
        CHECK(rad_to_hz(m.omega_c) == doctest::Approx(150.0).epsilon(1e-6));
        CHECK(m.phase_margin_deg == doctest::Approx(30.0).epsilon(0.05));
    }
}

TEST_CASE("k_p normalization") {
    const LoopTopology trivial{RationalTF::unity(), make_gfore(1.0, 1.0), RationalTF::unity(),
                               RationalTF({1.0}, {1.0, 0.0})};
    // The GFORE with gamma = 1 is 1/(1+s); at w = 1e-9 its gain is 1.
    CHECK(normalize_kp(trivial, 1e-9) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(resolve_kp(ControllerSpec::paper_linear(), paper_plant()) == doctest::Approx(29.74).epsilon(0.01));
    CHECK_THROWS_AS(normalize_kp(trivial, 0.0), InvalidParameter);
}

TEST_CASE("curves and breakdown agree with pointwise evaluation") {
    const LoopTopology loop = cnl(360.0, true);
    const FrequencyGrid grid = FrequencyGrid::log_spaced_hz(5.0, 2000.0, 40);
    const HosidfCurve l3 = open_loop_curve(loop, grid, 3);
    const HosidfCurve s3 = sensitivity_curve(loop, grid, 3);
    const ThirdOrderBreakdown b = third_order_breakdown(loop, grid);
    CHECK(l3.kind == CurveKind::open_loop);
    CHECK(s3.kind == CurveKind::sensitivity);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(rel(l3.values[i], open_loop_hosidf(loop, grid[i], 3)) < 1e-12);
        CHECK(rel(s3.values[i], sensitivity_hosidf(loop, grid[i], 3)) < 1e-12);
        CHECK(b.s3[i] == doctest::Approx(b.l3[i] * b.s_bl_3w[i] * b.s1[i]).epsilon(1e-12));
    }
    for (const auto& v : sensitivity_curve(loop, grid, 2).values) CHECK(v == cplx(0.0, 0.0));
}
