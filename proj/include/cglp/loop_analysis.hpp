#pragma once

// Frequency-domain analysis of the closed loop
//
//   r -(+)- e -> [pre] -> e_r -> [reset] -> u_r -> [post] -> u -(+ d)-> [plant] -> y
//       ^-                                                                      |
//       +------------------------------- (y + n) <-------------------------------+
//
// through open-loop describing functions and higher-order sensitivities.

#include <complex>
#include <functional>
#include <vector>

#include "cglp/lti.hpp"
#include "cglp/reset_element.hpp"

namespace cglp {

struct LoopTopology {
    RationalTF pre_reset;
    ResetElement reset;
    RationalTF post_reset;
    RationalTF plant;

    /// pre_reset * base_linear_tf(reset) * post_reset * plant
    RationalTF base_linear_open_loop() const;
};

enum class CurveKind { open_loop, sensitivity };

struct HosidfCurve {
    std::vector<double> omega;
    int order = 1;
    CurveKind kind = CurveKind::open_loop;
    std::vector<std::complex<double>> values;
};

/// L_n(w) = G(jnw) C2(jnw) H_n(w) C1(jw) exp(j(n-1) arg C1(jw)).
std::complex<double> open_loop_hosidf(const LoopTopology& loop, double omega, int n);

/// 1 / (1 + L_bl(jw)).
std::complex<double> base_linear_sensitivity(const LoopTopology& loop, double omega);

/// S_1 = 1/(1 + L_1); odd n >= 3: -L_n S_bl(jnw) |S_1| exp(j n arg S_1); even n: 0.
std::complex<double> sensitivity_hosidf(const LoopTopology& loop, double omega, int n);

/// |N(jw)| / |N(jnw)|: the factor by which pre-filtering with N and
/// post-filtering with N^-1 scales |S_n|. +inf when N vanishes at jnw.
double prepost_ratio(const RationalTF& notch, double omega, int n);

HosidfCurve open_loop_curve(const LoopTopology& loop, const FrequencyGrid& grid, int n);
HosidfCurve sensitivity_curve(const LoopTopology& loop, const FrequencyGrid& grid, int n);

/// Per-frequency pieces of |S_3| = |L_3| |S_bl(j3w)| |S_1|.
struct ThirdOrderBreakdown {
    std::vector<double> omega;
    std::vector<double> s1;
    std::vector<double> s3;
    std::vector<double> s_bl_3w;
    std::vector<double> l3;
};

ThirdOrderBreakdown third_order_breakdown(const LoopTopology& loop, const FrequencyGrid& grid);

struct CrossoverMargin {
    double omega_c;
    double phase_margin_deg;
};

/// Gain crossover of a first-order open loop and the phase margin there.
/// Throws NumericalError unless |L| crosses 1 exactly once in the bracket.
CrossoverMargin crossover_and_margin(const std::function<std::complex<double>(double)>& open_loop,
                                     double omega_lo = hz_to_rad(1.0),
                                     double omega_hi = hz_to_rad(1e4));

CrossoverMargin crossover_and_margin(const LoopTopology& loop, double omega_lo = hz_to_rad(1.0),
                                     double omega_hi = hz_to_rad(1e4));

/// Gain that puts the first-order loop at 0 dB at omega_c, given the loop
/// built with k_p = 1.
double normalize_kp(const LoopTopology& unit_gain_loop, double omega_c);

}  // namespace cglp
