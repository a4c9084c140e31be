#pragma once

// Reset element
//
//   x' = A x + B e        while e != 0
//   x+ = A_rho x          when e = 0 and (A_rho - I) x != 0
//   u  = C x + D e
//
// and its sinusoidal-input describing functions H_n(w): the complex gain from
// e = sin(w t) to the n-th harmonic of u in steady state.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cglp/lti.hpp"

namespace cglp {

/// Odd harmonics 1..9 are evaluated unless a caller asks otherwise.
inline constexpr int kDefaultMaxHarmonic = 9;

class ResetElement {
public:
    /// reset_values holds the diagonal of A_rho; each entry must lie in (-1, 1].
    ResetElement(Eigen::MatrixXd A, Eigen::VectorXd B, Eigen::RowVectorXd C, double D,
                 Eigen::VectorXd reset_values);

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::VectorXd& B() const { return B_; }
    const Eigen::RowVectorXd& C() const { return C_; }
    double D() const { return D_; }
    const Eigen::VectorXd& reset_values() const { return reset_; }
    Eigen::MatrixXd reset_matrix() const { return reset_.asDiagonal(); }

    int states() const { return static_cast<int>(A_.rows()); }

    /// All eigenvalues of A strictly in the open left half plane.
    bool hurwitz() const { return hurwitz_; }

    /// True when every reset value is 1, i.e. resets never change the state.
    bool is_linear() const;

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd B_;
    Eigen::RowVectorXd C_;
    double D_;
    Eigen::VectorXd reset_;
    bool hurwitz_;
};

/// Generalized first-order reset element: A=-w_a, B=1, C=w_a, D=0, A_rho=gamma.
ResetElement make_gfore(double omega_alpha, double gamma);

/// lim_{w->inf} Theta_D(w) for a GFORE: 4(1-gamma) / (pi(1+gamma)).
double theta_d_infinity(double gamma);

/// GFORE corner that matches the describing-function magnitude of the linear
/// lag 1/(1+s/omega_r) at both ends of the spectrum.
double gfore_corner_from_target(double omega_r, double gamma);

/// C (sI - A)^-1 B + D with zero delay.
RationalTF base_linear_tf(const ResetElement& r);

Eigen::MatrixXd theta_d(const ResetElement& r, double omega);

struct HarmonicResponse {
    int order;
    std::complex<double> value;
};

HarmonicResponse hosidf(const ResetElement& r, double omega, int n);

/// H_1..H_max_order at one frequency, sharing a single Theta_D evaluation.
std::vector<HarmonicResponse> hosidf_series(const ResetElement& r, double omega,
                                            int max_order = kDefaultMaxHarmonic);

}  // namespace cglp
