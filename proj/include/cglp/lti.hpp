#pragma once

// Single-input single-output LTI blocks as real rational functions of s
// with an optional pure input delay.

#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cglp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double rad) { return rad / kTwoPi; }

/// Strictly increasing list of positive angular frequencies [rad/s].
class FrequencyGrid {
public:
    explicit FrequencyGrid(std::vector<double> omega);

    static FrequencyGrid log_spaced(double omega_lo, double omega_hi, std::size_t points);
    static FrequencyGrid log_spaced_hz(double f_lo, double f_hi, std::size_t points);
    /// 1000 log-spaced points over 1 Hz .. 10 kHz.
    static FrequencyGrid standard();

    std::span<const double> omega() const { return omega_; }
    std::size_t size() const { return omega_.size(); }
    double operator[](std::size_t i) const { return omega_[i]; }

private:
    std::vector<double> omega_;
};

/// Proper real rational transfer function N(s)/D(s) * exp(-s*delay).
/// Coefficients are stored in ascending powers of s.
class RationalTF {
public:
    RationalTF(std::vector<double> numerator, std::vector<double> denominator, double delay = 0.0);

    static RationalTF unity() { return RationalTF({1.0}, {1.0}); }
    static RationalTF gain(double k) { return RationalTF({k}, {1.0}); }

    const std::vector<double>& numerator() const { return num_; }
    const std::vector<double>& denominator() const { return den_; }
    double delay() const { return delay_; }

    int numerator_degree() const { return static_cast<int>(num_.size()) - 1; }
    int order() const { return static_cast<int>(den_.size()) - 1; }
    bool strictly_proper() const;

    /// N(jw)/D(jw) * exp(-j*w*delay). Throws NumericalError if D(jw) == 0.
    std::complex<double> eval(double omega) const;

    /// Vectorized evaluation over many frequencies.
    std::vector<std::complex<double>> eval(std::span<const double> omega) const;
    std::vector<std::complex<double>> eval(const FrequencyGrid& grid) const { return eval(grid.omega()); }

    /// Gain at s = 0; +inf when the denominator has a root at the origin.
    double dc_gain() const;

    /// Same transfer function with a different delay.
    RationalTF with_delay(double delay) const;

    friend bool operator==(const RationalTF&, const RationalTF&) = default;

private:
    std::vector<double> num_;
    std::vector<double> den_;
    double delay_;
};

/// Cascade a then b: polynomial products, delays add.
RationalTF series(const RationalTF& a, const RationalTF& b);

/// (1 + s/omega_r) / (1 + s/omega_f), omega_r < omega_f.
RationalTF make_lead(double omega_r, double omega_f);

struct SplitLead {
    RationalTF pre;   // (1 + s/omega_r) / (1 + s/omega_x)
    RationalTF post;  // (1 + s/omega_x) / (1 + s/omega_f)
};

/// Splits make_lead(omega_r, omega_f) at omega_x in [omega_r, omega_f].
/// A coincident pole/zero pair collapses to unity.
SplitLead make_split_lead(double omega_r, double omega_x, double omega_f);

/// Corner frequencies of the series PID k_p (1 + w_i/s)(1 + s/w_d)/(1 + s/w_t).
struct PidCorners {
    double omega_i;
    double omega_d;
    double omega_t;

    /// w_i = w_c/10, w_d = w_c/3, w_t = 3 w_c.
    static PidCorners rule_of_thumb(double omega_c);
};

RationalTF make_pid(double kp, const PidCorners& corners);
inline RationalTF make_pid(double kp, double omega_c) {
    return make_pid(kp, PidCorners::rule_of_thumb(omega_c));
}

struct NotchPair {
    RationalTF notch;    // N
    RationalTF inverse;  // N^-1, numerator and denominator swapped
};

/// N(s) = (s^2/wn^2 + s/(q1 wn) + 1) / (s^2/wn^2 + s/(q2 wn) + 1).
/// |N(j wn)| = q2/q1; q1 == q2 yields unity.
NotchPair make_notch(double omega_n, double q1, double q2);

/// Factored form: tf(s) = gain * s^(zeros_at_origin - poles_at_origin)
///   * prod(1 - s/z) / prod(1 - s/p) * exp(-s*delay)
/// over the nonzero roots. Complex roots come in conjugate pairs.
struct ZeroPoleGain {
    std::vector<std::complex<double>> zeros;
    std::vector<std::complex<double>> poles;
    int zeros_at_origin = 0;
    int poles_at_origin = 0;
    double gain = 0.0;
    double delay = 0.0;
};

ZeroPoleGain factor(const RationalTF& tf);
RationalTF from_factors(const ZeroPoleGain& zpk);

/// Removes pole/zero pairs that agree to within rel_tol (relative to the root
/// magnitude; roots at the origin cancel exactly). The result is in natural
/// form: lowest nonzero denominator coefficient equals 1.
RationalTF cancel_common_roots(const RationalTF& tf, double rel_tol = 1e-6);

/// Continuous single-input single-output state space.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;

    int states() const { return static_cast<int>(A.rows()); }
};

/// Realization as a cascade of first- and second-order sections built from the
/// roots, each section scaled so its entries are of the order of its corner
/// frequencies. Ignores the delay.
StateSpace realize(const RationalTF& tf);

}  // namespace cglp
