#include "cglp/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/Polynomials>

#include "cglp/error.hpp"
#include "cglp/kernels.hpp"

namespace cglp {

namespace {

using Poly = std::vector<double>;
using cplx = std::complex<double>;

void trim_high_zeros(Poly& p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
}

Poly convolve(const Poly& a, const Poly& b) {
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

cplx horner_jw(const Poly& c, double w) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        const double next_re = -im * w + c[k];
        im = re * w;
        re = next_re;
    }
    return {re, im};
}

bool all_finite(const Poly& p) {
    return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidParameter(std::string(what) + " must be positive and finite, got " +
                               std::to_string(v));
    }
}

// Roots of the polynomial with exact zero low-order coefficients stripped
// (those are counted separately as roots at the origin).
struct RootSet {
    std::vector<cplx> roots;
    int at_origin = 0;
    double lowest_coeff = 0.0;
};

constexpr double kRealRootTol = 1e-7;

RootSet roots_of(const Poly& p) {
    RootSet rs;
    std::size_t k = 0;
    while (k + 1 < p.size() && p[k] == 0.0) ++k;
    rs.at_origin = static_cast<int>(k);
    rs.lowest_coeff = p[k];
    const Poly rest(p.begin() + static_cast<std::ptrdiff_t>(k), p.end());
    const std::size_t degree = rest.size() - 1;
    if (degree == 0) return rs;
    if (degree == 1) {
        rs.roots.emplace_back(-rest[0] / rest[1], 0.0);
        return rs;
    }
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(rest.size()));
    for (std::size_t i = 0; i < rest.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = rest[i];
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);
    std::vector<cplx> raw(solver.roots().begin(), solver.roots().end());
    // Snap near-real roots onto the real axis and make complex pairs exact conjugates.
    for (const cplx& r : raw) {
        if (std::abs(r.imag()) <= kRealRootTol * std::abs(r)) {
            rs.roots.emplace_back(r.real(), 0.0);
        } else if (r.imag() > 0.0) {
            rs.roots.push_back(r);
            rs.roots.push_back(std::conj(r));
        }
    }
    return rs;
}

// Ascending coefficients of the natural-form factor for one real root or a
// conjugate pair represented by its upper-half-plane member.
Poly natural_factor_real(double r) {
    if (r == 0.0) return {0.0, 1.0};
    return {1.0, -1.0 / r};
}

Poly natural_factor_pair(cplx r) {
    const double m2 = std::norm(r);
    return {1.0, -2.0 * r.real() / m2, 1.0 / m2};
}

Poly natural_poly(const std::vector<cplx>& roots, int at_origin) {
    Poly p{1.0};
    for (const cplx& r : roots) {
        if (r.imag() == 0.0) {
            p = convolve(p, natural_factor_real(r.real()));
        } else if (r.imag() > 0.0) {
            p = convolve(p, natural_factor_pair(r));
        }
    }
    if (at_origin > 0) p.insert(p.begin(), static_cast<std::size_t>(at_origin), 0.0);
    return p;
}

StateSpace series_ss(const StateSpace& a, const StateSpace& b) {
    const int na = a.states();
    const int nb = b.states();
    StateSpace out;
    out.A = Eigen::MatrixXd::Zero(na + nb, na + nb);
    out.A.topLeftCorner(na, na) = a.A;
    out.A.bottomLeftCorner(nb, na) = b.B * a.C;
    out.A.bottomRightCorner(nb, nb) = b.A;
    out.B.resize(na + nb);
    out.B.head(na) = a.B;
    out.B.tail(nb) = b.B * a.D;
    out.C.resize(na + nb);
    out.C.head(na) = b.D * a.C;
    out.C.tail(nb) = b.C;
    out.D = b.D * a.D;
    return out;
}

// Section with monic-normalized denominator and numerator of equal length.
StateSpace section_ss(const Poly& num_in, const Poly& den_in) {
    const std::size_t n = den_in.size() - 1;
    Poly num = num_in;
    num.resize(den_in.size(), 0.0);
    const double lead = den_in.back();
    Poly den = den_in;
    for (double& v : den) v /= lead;
    for (double& v : num) v /= lead;

    StateSpace ss;
    if (n == 1) {
        const double a0 = den[0];
        ss.A = Eigen::MatrixXd::Constant(1, 1, -a0);
        ss.B = Eigen::VectorXd::Ones(1);
        ss.C = Eigen::RowVectorXd::Constant(1, num[0] - num[1] * a0);
        ss.D = num[1];
        return ss;
    }
    const double a0 = den[0];
    const double a1 = den[1];
    double w = 1.0;
    if (a0 != 0.0) {
        w = std::sqrt(std::abs(a0));
    } else if (a1 != 0.0) {
        w = std::abs(a1);
    }
    ss.A.resize(2, 2);
    ss.A << 0.0, w, -a0 / w, -a1;
    ss.B.resize(2);
    ss.B << 0.0, 1.0;
    ss.C.resize(2);
    ss.C << (num[0] - num[2] * a0) / w, num[1] - num[2] * a1;
    ss.D = num[2];
    return ss;
}

}  // namespace

// ---------------------------------------------------------------------------
// FrequencyGrid

FrequencyGrid::FrequencyGrid(std::vector<double> omega) : omega_(std::move(omega)) {
    if (omega_.empty()) throw InvalidParameter("frequency grid must be nonempty");
    for (std::size_t i = 0; i < omega_.size(); ++i) {
        if (!(omega_[i] > 0.0) || !std::isfinite(omega_[i])) {
            throw InvalidParameter("frequency grid values must be positive and finite");
        }
        if (i > 0 && !(omega_[i] > omega_[i - 1])) {
            throw InvalidParameter("frequency grid must be strictly increasing");
        }
    }
}

FrequencyGrid FrequencyGrid::log_spaced(double omega_lo, double omega_hi, std::size_t points) {
    require_positive(omega_lo, "lower grid frequency");
    require_positive(omega_hi, "upper grid frequency");
    if (points == 0) throw InvalidParameter("frequency grid needs at least one point");
    if (points == 1) return FrequencyGrid({omega_lo});
    if (!(omega_hi > omega_lo)) throw InvalidParameter("grid upper bound must exceed lower bound");
    std::vector<double> w(points);
    const double a = std::log(omega_lo);
    const double b = std::log(omega_hi);
    for (std::size_t i = 0; i < points; ++i) {
        w[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    w.front() = omega_lo;
    w.back() = omega_hi;
    return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::log_spaced_hz(double f_lo, double f_hi, std::size_t points) {
    return log_spaced(hz_to_rad(f_lo), hz_to_rad(f_hi), points);
}

FrequencyGrid FrequencyGrid::standard() { return log_spaced_hz(1.0, 1e4, 1000); }

// ---------------------------------------------------------------------------
// RationalTF

RationalTF::RationalTF(std::vector<double> numerator, std::vector<double> denominator, double delay)
    : num_(std::move(numerator)), den_(std::move(denominator)), delay_(delay) {
    if (num_.empty()) num_.push_back(0.0);
    if (den_.empty()) throw InvalidParameter("denominator must have at least one coefficient");
    if (!all_finite(num_) || !all_finite(den_)) {
        throw InvalidParameter("transfer function coefficients must be finite");
    }
    trim_high_zeros(num_);
    trim_high_zeros(den_);
    if (den_.size() == 1 && den_[0] == 0.0) throw InvalidParameter("denominator is identically zero");
    if (num_.size() > den_.size()) {
        throw InvalidParameter("improper transfer function: numerator degree " +
                               std::to_string(num_.size() - 1) + " exceeds denominator degree " +
                               std::to_string(den_.size() - 1));
    }
    if (!(delay_ >= 0.0) || !std::isfinite(delay_)) {
        throw InvalidParameter("delay must be finite and nonnegative");
    }
}

bool RationalTF::strictly_proper() const {
    return num_.size() < den_.size() || (num_.size() == 1 && num_[0] == 0.0);
}

std::complex<double> RationalTF::eval(double omega) const {
    const cplx d = horner_jw(den_, omega);
    if (d == cplx(0.0, 0.0)) {
        throw NumericalError("pole on evaluation frequency " + std::to_string(omega) + " rad/s");
    }
    cplx v = horner_jw(num_, omega) / d;
    if (delay_ != 0.0) v *= std::polar(1.0, -omega * delay_);
    return v;
}

std::vector<std::complex<double>> RationalTF::eval(std::span<const double> omega) const {
    const auto& k = kernels::active();
    std::vector<cplx> n(omega.size());
    std::vector<cplx> d(omega.size());
    k.eval_poly_jw(num_, omega, n);
    k.eval_poly_jw(den_, omega, d);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (d[i] == cplx(0.0, 0.0)) {
            throw NumericalError("pole on evaluation frequency " + std::to_string(omega[i]) +
                                 " rad/s");
        }
        n[i] /= d[i];
        if (delay_ != 0.0) n[i] *= std::polar(1.0, -omega[i] * delay_);
    }
    return n;
}

double RationalTF::dc_gain() const {
    if (den_[0] == 0.0) return std::numeric_limits<double>::infinity();
    return num_[0] / den_[0];
}

RationalTF RationalTF::with_delay(double delay) const { return RationalTF(num_, den_, delay); }

RationalTF series(const RationalTF& a, const RationalTF& b) {
    return RationalTF(convolve(a.numerator(), b.numerator()),
                      convolve(a.denominator(), b.denominator()), a.delay() + b.delay());
}

// ---------------------------------------------------------------------------
// Constructors

RationalTF make_lead(double omega_r, double omega_f) {
    require_positive(omega_r, "lead zero frequency");
    require_positive(omega_f, "lead pole frequency");
    if (!(omega_r < omega_f)) {
        throw InvalidParameter("lead requires omega_r < omega_f");
    }
    return RationalTF({1.0, 1.0 / omega_r}, {1.0, 1.0 / omega_f});
}

SplitLead make_split_lead(double omega_r, double omega_x, double omega_f) {
    require_positive(omega_r, "lead zero frequency");
    require_positive(omega_f, "lead pole frequency");
    if (!(omega_r < omega_f)) throw InvalidParameter("lead requires omega_r < omega_f");
    if (!(omega_x >= omega_r && omega_x <= omega_f)) {
        throw InvalidParameter("split frequency omega_x must lie in [omega_r, omega_f]");
    }
    SplitLead out{RationalTF::unity(), RationalTF::unity()};
    if (omega_x != omega_r) out.pre = RationalTF({1.0, 1.0 / omega_r}, {1.0, 1.0 / omega_x});
    if (omega_x != omega_f) out.post = RationalTF({1.0, 1.0 / omega_x}, {1.0, 1.0 / omega_f});
    return out;
}

PidCorners PidCorners::rule_of_thumb(double omega_c) {
    require_positive(omega_c, "crossover frequency");
    return {omega_c / 10.0, omega_c / 3.0, 3.0 * omega_c};
}

RationalTF make_pid(double kp, const PidCorners& c) {
    require_positive(kp, "k_p");
    require_positive(c.omega_i, "integrator corner omega_i");
    require_positive(c.omega_d, "derivative corner omega_d");
    require_positive(c.omega_t, "tamed-derivative corner omega_t");
    // kp (s + wi)(1 + s/wd) / (s (1 + s/wt))
    Poly num = convolve({c.omega_i, 1.0}, {1.0, 1.0 / c.omega_d});
    for (double& v : num) v *= kp;
    return RationalTF(std::move(num), {0.0, 1.0, 1.0 / c.omega_t});
}

NotchPair make_notch(double omega_n, double q1, double q2) {
    require_positive(omega_n, "notch frequency");
    require_positive(q1, "notch Q1");
    require_positive(q2, "notch Q2");
    if (q1 == q2) return {RationalTF::unity(), RationalTF::unity()};
    const double inv_w2 = 1.0 / (omega_n * omega_n);
    Poly top{1.0, 1.0 / (q1 * omega_n), inv_w2};
    Poly bottom{1.0, 1.0 / (q2 * omega_n), inv_w2};
    return {RationalTF(top, bottom), RationalTF(bottom, top)};
}

// ---------------------------------------------------------------------------
// Factoring and realization

ZeroPoleGain factor(const RationalTF& tf) {
    ZeroPoleGain z;
    z.delay = tf.delay();
    const RootSet num = roots_of(tf.numerator());
    const RootSet den = roots_of(tf.denominator());
    z.zeros = num.roots;
    z.poles = den.roots;
    z.zeros_at_origin = num.at_origin;
    z.poles_at_origin = den.at_origin;
    z.gain = num.lowest_coeff / den.lowest_coeff;
    if (num.lowest_coeff == 0.0) {
        // Zero transfer function.
        z.zeros.clear();
        z.zeros_at_origin = 0;
    }
    return z;
}

RationalTF from_factors(const ZeroPoleGain& zpk) {
    Poly num = natural_poly(zpk.zeros, zpk.zeros_at_origin);
    for (double& v : num) v *= zpk.gain;
    return RationalTF(std::move(num), natural_poly(zpk.poles, zpk.poles_at_origin), zpk.delay);
}

RationalTF cancel_common_roots(const RationalTF& tf, double rel_tol) {
    ZeroPoleGain z = factor(tf);
    const int common = std::min(z.zeros_at_origin, z.poles_at_origin);
    z.zeros_at_origin -= common;
    z.poles_at_origin -= common;

    std::vector<bool> pole_used(z.poles.size(), false);
    std::vector<cplx> kept_zeros;
    for (const cplx& zero : z.zeros) {
        std::size_t best = z.poles.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < z.poles.size(); ++i) {
            if (pole_used[i]) continue;
            const double dist = std::abs(zero - z.poles[i]);
            if (dist <= rel_tol * std::abs(z.poles[i]) && dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        if (best < z.poles.size()) {
            pole_used[best] = true;
        } else {
            kept_zeros.push_back(zero);
        }
    }
    std::vector<cplx> kept_poles;
    for (std::size_t i = 0; i < z.poles.size(); ++i) {
        if (!pole_used[i]) kept_poles.push_back(z.poles[i]);
    }
    z.zeros = std::move(kept_zeros);
    z.poles = std::move(kept_poles);
    return from_factors(z);
}

StateSpace realize(const RationalTF& tf) {
    const ZeroPoleGain z = factor(tf);

    // Split roots into real values (origin included) and upper-half-plane pair members.
    auto split = [](const std::vector<cplx>& roots, int at_origin, std::vector<double>& reals,
                    std::vector<cplx>& pairs) {
        reals.assign(static_cast<std::size_t>(at_origin), 0.0);
        for (const cplx& r : roots) {
            if (r.imag() == 0.0) {
                reals.push_back(r.real());
            } else if (r.imag() > 0.0) {
                pairs.push_back(r);
            }
        }
        std::sort(reals.begin(), reals.end(),
                  [](double a, double b) { return std::abs(a) < std::abs(b); });
    };
    std::vector<double> real_poles, real_zeros;
    std::vector<cplx> pair_poles, pair_zeros;
    split(z.poles, z.poles_at_origin, real_poles, pair_poles);
    split(z.zeros, z.zeros_at_origin, real_zeros, pair_zeros);

    struct Section {
        Poly den;
        Poly num{1.0};
        int capacity;
        double scale;  // representative pole magnitude
    };
    std::vector<Section> sections;
    for (const cplx& p : pair_poles) sections.push_back({natural_factor_pair(p), {1.0}, 2, std::abs(p)});
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
        sections.push_back({convolve(natural_factor_real(real_poles[i]),
                                     natural_factor_real(real_poles[i + 1])),
                            {1.0},
                            2,
                            std::max(std::abs(real_poles[i]), std::abs(real_poles[i + 1]))});
    }
    if (real_poles.size() % 2 == 1) {
        sections.push_back({natural_factor_real(real_poles.back()), {1.0}, 1, std::abs(real_poles.back())});
    }

    auto closest = [&](double magnitude, int needed) {
        std::size_t best = sections.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (sections[i].capacity < needed) continue;
            const double d = std::abs(std::log((magnitude + 1e-300) / (sections[i].scale + 1e-300)));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    };
    for (const cplx& zr : pair_zeros) {
        const std::size_t s = closest(std::abs(zr), 2);
        sections[s].num = convolve(sections[s].num, natural_factor_pair(zr));
        sections[s].capacity -= 2;
    }
    for (double zr : real_zeros) {
        const std::size_t s = closest(std::abs(zr), 1);
        sections[s].num = convolve(sections[s].num, natural_factor_real(zr));
        sections[s].capacity -= 1;
    }

    StateSpace out;
    out.A.resize(0, 0);
    out.B.resize(0);
    out.C.resize(0);
    out.D = 1.0;
    // Slow sections first.
    std::sort(sections.begin(), sections.end(),
              [](const Section& a, const Section& b) { return a.scale < b.scale; });
    for (const Section& s : sections) out = series_ss(out, section_ss(s.num, s.den));
    out.C *= z.gain;
    out.D *= z.gain;
    return out;
}

}  // namespace cglp
