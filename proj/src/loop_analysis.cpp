#include "cglp/loop_analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "cglp/error.hpp"

namespace cglp {

namespace {

using cplx = std::complex<double>;

void check_args(double omega, int n) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw InvalidParameter("analysis frequency must be positive and finite");
    }
    if (n < 1) throw InvalidParameter("harmonic order must be >= 1");
}

cplx compose_ln(cplx c1_w, cplx c2_nw, cplx g_nw, cplx h_n, int n) {
    return g_nw * c2_nw * h_n * c1_w * std::polar(1.0, (n - 1) * std::arg(c1_w));
}

cplx s1_from(cplx l1, double omega) {
    const cplx den = 1.0 + l1;
    if (den == cplx(0.0, 0.0)) {
        throw NumericalError("singular sensitivity: 1 + L_1 = 0 at " + std::to_string(omega) +
                             " rad/s");
    }
    return 1.0 / den;
}

cplx sbl_from(cplx lbl, double omega) {
    const cplx den = 1.0 + lbl;
    if (den == cplx(0.0, 0.0)) {
        throw NumericalError("singular sensitivity: 1 + L_bl = 0 at " + std::to_string(omega) +
                             " rad/s");
    }
    return 1.0 / den;
}

cplx sn_from(cplx s1, cplx ln, cplx sbl_nw, int n) {
    return -ln * sbl_nw * std::abs(s1) * std::polar(1.0, n * std::arg(s1));
}

std::vector<double> scaled(std::span<const double> w, int n) {
    std::vector<double> out(w.begin(), w.end());
    for (double& v : out) v *= n;
    return out;
}

// Everything the sensitivities need at one harmonic order over a grid.
struct GridTerms {
    std::vector<cplx> l1;
    std::vector<cplx> ln;
    std::vector<cplx> sbl_nw;
};

GridTerms grid_terms(const LoopTopology& loop, std::span<const double> w, int n) {
    const std::vector<double> nw = scaled(w, n);
    const auto c1 = loop.pre_reset.eval(w);
    const auto c2 = loop.post_reset.eval(w);
    const auto g = loop.plant.eval(w);
    const auto c2n = loop.post_reset.eval(nw);
    const auto gn = loop.plant.eval(nw);
    const auto lbl = loop.base_linear_open_loop().eval(nw);

    GridTerms t;
    t.l1.resize(w.size());
    t.ln.resize(w.size());
    t.sbl_nw.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto h = hosidf_series(loop.reset, w[i], n);
        t.l1[i] = compose_ln(c1[i], c2[i], g[i], h[0].value, 1);
        t.ln[i] = compose_ln(c1[i], c2n[i], gn[i], h[static_cast<std::size_t>(n - 1)].value, n);
        t.sbl_nw[i] = sbl_from(lbl[i], nw[i]);
    }
    return t;
}

}  // namespace

RationalTF LoopTopology::base_linear_open_loop() const {
    return series(series(series(pre_reset, base_linear_tf(reset)), post_reset), plant);
}

std::complex<double> open_loop_hosidf(const LoopTopology& loop, double omega, int n) {
    check_args(omega, n);
    if (n % 2 == 0) return {0.0, 0.0};
    const cplx h = hosidf(loop.reset, omega, n).value;
    return compose_ln(loop.pre_reset.eval(omega), loop.post_reset.eval(n * omega),
                      loop.plant.eval(n * omega), h, n);
}

std::complex<double> base_linear_sensitivity(const LoopTopology& loop, double omega) {
    check_args(omega, 1);
    return sbl_from(loop.base_linear_open_loop().eval(omega), omega);
}

std::complex<double> sensitivity_hosidf(const LoopTopology& loop, double omega, int n) {
    check_args(omega, n);
    if (n % 2 == 0) return {0.0, 0.0};
    const cplx s1 = s1_from(open_loop_hosidf(loop, omega, 1), omega);
    if (n == 1) return s1;
    const cplx ln = open_loop_hosidf(loop, omega, n);
    return sn_from(s1, ln, base_linear_sensitivity(loop, n * omega), n);
}

double prepost_ratio(const RationalTF& notch, double omega, int n) {
    check_args(omega, n);
    const double at_harmonic = std::abs(notch.eval(n * omega));
    if (at_harmonic == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(notch.eval(omega)) / at_harmonic;
}

HosidfCurve open_loop_curve(const LoopTopology& loop, const FrequencyGrid& grid, int n) {
    check_args(grid[0], n);
    HosidfCurve curve;
    curve.omega.assign(grid.omega().begin(), grid.omega().end());
    curve.order = n;
    curve.kind = CurveKind::open_loop;
    curve.values.assign(grid.size(), cplx(0.0, 0.0));
    if (n % 2 == 0) return curve;
    const auto w = grid.omega();
    const std::vector<double> nw = scaled(w, n);
    const auto c1 = loop.pre_reset.eval(w);
    const auto c2n = loop.post_reset.eval(nw);
    const auto gn = loop.plant.eval(nw);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        curve.values[i] = compose_ln(c1[i], c2n[i], gn[i], hosidf(loop.reset, w[i], n).value, n);
    }
    return curve;
}

HosidfCurve sensitivity_curve(const LoopTopology& loop, const FrequencyGrid& grid, int n) {
    check_args(grid[0], n);
    HosidfCurve curve;
    curve.omega.assign(grid.omega().begin(), grid.omega().end());
    curve.order = n;
    curve.kind = CurveKind::sensitivity;
    curve.values.assign(grid.size(), cplx(0.0, 0.0));
    if (n % 2 == 0) return curve;
    const GridTerms t = grid_terms(loop, grid.omega(), n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx s1 = s1_from(t.l1[i], grid[i]);
        curve.values[i] = n == 1 ? s1 : sn_from(s1, t.ln[i], t.sbl_nw[i], n);
    }
    return curve;
}

ThirdOrderBreakdown third_order_breakdown(const LoopTopology& loop, const FrequencyGrid& grid) {
    const GridTerms t = grid_terms(loop, grid.omega(), 3);
    ThirdOrderBreakdown out;
    out.omega.assign(grid.omega().begin(), grid.omega().end());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx s1 = s1_from(t.l1[i], grid[i]);
        out.s1.push_back(std::abs(s1));
        out.s3.push_back(std::abs(sn_from(s1, t.ln[i], t.sbl_nw[i], 3)));
        out.s_bl_3w.push_back(std::abs(t.sbl_nw[i]));
        out.l3.push_back(std::abs(t.ln[i]));
    }
    return out;
}

CrossoverMargin crossover_and_margin(const std::function<std::complex<double>(double)>& open_loop,
                                     double omega_lo, double omega_hi) {
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo)) {
        throw InvalidParameter("crossover search bracket must satisfy 0 < lo < hi");
    }
    constexpr int kScan = 4000;
    const double a = std::log(omega_lo);
    const double b = std::log(omega_hi);
    auto excess = [&](double log_w) { return std::log(std::abs(open_loop(std::exp(log_w)))); };

    std::vector<std::pair<double, double>> brackets;
    double prev_x = a;
    double prev_f = excess(a);
    for (int i = 1; i <= kScan; ++i) {
        const double x = a + (b - a) * i / kScan;
        const double f = excess(x);
        if ((prev_f > 0.0) != (f > 0.0)) brackets.emplace_back(prev_x, x);
        prev_x = x;
        prev_f = f;
    }
    if (brackets.size() != 1) {
        std::ostringstream msg;
        msg << (brackets.empty() ? "no gain crossover" : "multiple gain crossovers")
            << " in [" << rad_to_hz(omega_lo) << ", " << rad_to_hz(omega_hi) << "] Hz";
        for (const auto& [lo, hi] : brackets) {
            msg << "; candidate [" << rad_to_hz(std::exp(lo)) << ", " << rad_to_hz(std::exp(hi))
                << "] Hz";
        }
        throw NumericalError(msg.str());
    }

    auto [lo, hi] = brackets.front();
    double f_lo = excess(lo);
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double f = excess(mid);
        if (std::abs(std::abs(open_loop(std::exp(mid))) - 1.0) < 1e-9 && hi - lo < 1e-12) break;
        if ((f > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    const double omega_c = std::exp(mid);
    double pm = 180.0 + std::arg(open_loop(omega_c)) * 180.0 / std::numbers::pi;
    if (pm > 180.0) pm -= 360.0;
    return {omega_c, pm};
}

CrossoverMargin crossover_and_margin(const LoopTopology& loop, double omega_lo, double omega_hi) {
    return crossover_and_margin([&](double w) { return open_loop_hosidf(loop, w, 1); }, omega_lo,
                                omega_hi);
}

double normalize_kp(const LoopTopology& unit_gain_loop, double omega_c) {
    if (!(omega_c > 0.0)) throw InvalidParameter("crossover frequency must be positive");
    const double mag = std::abs(open_loop_hosidf(unit_gain_loop, omega_c, 1));
    if (!(mag > 0.0) || !std::isfinite(mag)) {
        throw NumericalError("open loop has zero or infinite gain at the crossover frequency");
    }
    return 1.0 / mag;
}

}  // namespace cglp
