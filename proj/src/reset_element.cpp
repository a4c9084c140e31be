#include "cglp/reset_element.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "cglp/error.hpp"

namespace cglp {

namespace {

using cplx = std::complex<double>;

void check_gamma(double gamma) {
    if (!(gamma > -1.0 && gamma <= 1.0)) {
        throw InvalidParameter("reset value must lie in (-1, 1], got " + std::to_string(gamma));
    }
}

// Theta_D and the per-harmonic resolvent C (j n w I - A)^-1 applied to a vector.
cplx resolvent_form(const ResetElement& r, double omega, const Eigen::VectorXcd& v) {
    const int n = r.states();
    Eigen::MatrixXcd M = cplx(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - r.A().cast<cplx>();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (std::abs(lu.determinant()) == 0.0) {
        throw NumericalError("reset element has a pole on the harmonic frequency " +
                             std::to_string(omega) + " rad/s");
    }
    const Eigen::VectorXcd x = lu.solve(v);
    return (r.C().cast<cplx>() * x)(0, 0);
}

cplx harmonic_from_theta(const ResetElement& r, const Eigen::MatrixXd& theta, double omega, int n) {
    if (n % 2 == 0) return {0.0, 0.0};
    const Eigen::VectorXcd jtheta_b = cplx(0.0, 1.0) * (theta * r.B()).cast<cplx>();
    if (n == 1) {
        const Eigen::VectorXcd v = r.B().cast<cplx>() + jtheta_b;
        return resolvent_form(r, omega, v) + r.D();
    }
    return resolvent_form(r, n * omega, jtheta_b);
}

}  // namespace

ResetElement::ResetElement(Eigen::MatrixXd A, Eigen::VectorXd B, Eigen::RowVectorXd C, double D,
                           Eigen::VectorXd reset_values)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(D), reset_(std::move(reset_values)) {
    const auto n = A_.rows();
    if (A_.cols() != n || B_.size() != n || C_.size() != n || reset_.size() != n) {
        throw InvalidParameter("reset element dimensions are inconsistent");
    }
    if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite() || !std::isfinite(D_)) {
        throw InvalidParameter("reset element matrices must be finite");
    }
    for (Eigen::Index i = 0; i < n; ++i) check_gamma(reset_[i]);
    hurwitz_ = true;
    if (n > 0) {
        const Eigen::VectorXcd eig = A_.eigenvalues();
        for (Eigen::Index i = 0; i < eig.size(); ++i) {
            if (!(eig[i].real() < 0.0)) hurwitz_ = false;
        }
    }
}

bool ResetElement::is_linear() const { return (reset_.array() == 1.0).all(); }

ResetElement make_gfore(double omega_alpha, double gamma) {
    if (!(omega_alpha > 0.0) || !std::isfinite(omega_alpha)) {
        throw InvalidParameter("GFORE corner frequency must be positive");
    }
    check_gamma(gamma);
    return ResetElement(Eigen::MatrixXd::Constant(1, 1, -omega_alpha), Eigen::VectorXd::Ones(1),
                        Eigen::RowVectorXd::Constant(1, omega_alpha), 0.0,
                        Eigen::VectorXd::Constant(1, gamma));
}

double theta_d_infinity(double gamma) {
    check_gamma(gamma);
    return 4.0 * (1.0 - gamma) / (std::numbers::pi * (1.0 + gamma));
}

double gfore_corner_from_target(double omega_r, double gamma) {
    if (!(omega_r > 0.0) || !std::isfinite(omega_r)) {
        throw InvalidParameter("target corner frequency must be positive");
    }
    const double t = theta_d_infinity(gamma);
    return omega_r / std::sqrt(1.0 + t * t);
}

RationalTF base_linear_tf(const ResetElement& r) {
    const int n = r.states();
    if (n == 0) return RationalTF::gain(r.D());
    // Faddeev-LeVerrier: det(sI - A) = sum c_k s^k, adj(sI - A) = sum_k M_k s^(n-k).
    std::vector<double> den(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> num(static_cast<std::size_t>(n) + 1, 0.0);
    den[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        num[static_cast<std::size_t>(n - k)] = (r.C() * M * r.B())(0, 0);
        const Eigen::MatrixXd AM = r.A() * M;
        const double c = -AM.trace() / k;
        den[static_cast<std::size_t>(n - k)] = c;
        M = AM + c * Eigen::MatrixXd::Identity(n, n);
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] += r.D() * den[i];
    return RationalTF(std::move(num), std::move(den));
}

Eigen::MatrixXd theta_d(const ResetElement& r, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw InvalidParameter("describing function frequency must be positive");
    }
    const int n = r.states();
    // Without jumps Gamma_r equals Lambda^-1; return the exact zero.
    if (r.is_linear()) return Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Arho = r.reset_matrix();
    const Eigen::MatrixXd Lambda = omega * omega * I + r.A() * r.A();
    const Eigen::MatrixXd E = (std::numbers::pi / omega * r.A()).exp();
    const Eigen::MatrixXd Delta = I + E;
    const Eigen::MatrixXd Delta_r = I + Arho * E;

    Eigen::FullPivLU<Eigen::MatrixXd> lu_r(Delta_r);
    if (!lu_r.isInvertible()) {
        throw NumericalError("reset describing function undefined at " + std::to_string(omega) +
                             " rad/s (singular Delta_r)");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu_l(Lambda);
    if (!lu_l.isInvertible()) {
        throw NumericalError("reset describing function undefined at " + std::to_string(omega) +
                             " rad/s (singular Lambda)");
    }
    const Eigen::MatrixXd Lambda_inv = lu_l.inverse();
    const Eigen::MatrixXd Gamma_r = lu_r.solve(Arho * Delta * Lambda_inv);
    return -(2.0 * omega * omega / std::numbers::pi) * Delta * (Gamma_r - Lambda_inv);
}

HarmonicResponse hosidf(const ResetElement& r, double omega, int n) {
    if (n < 1) throw InvalidParameter("harmonic order must be >= 1");
    if (n % 2 == 0) {
        if (!(omega > 0.0)) throw InvalidParameter("describing function frequency must be positive");
        return {n, {0.0, 0.0}};
    }
    return {n, harmonic_from_theta(r, theta_d(r, omega), omega, n)};
}

std::vector<HarmonicResponse> hosidf_series(const ResetElement& r, double omega, int max_order) {
    if (max_order < 1) throw InvalidParameter("harmonic order must be >= 1");
    const Eigen::MatrixXd theta = theta_d(r, omega);
    std::vector<HarmonicResponse> out;
    out.reserve(static_cast<std::size_t>(max_order));
    for (int n = 1; n <= max_order; ++n) out.push_back({n, harmonic_from_theta(r, theta, omega, n)});
    return out;
}

}  // namespace cglp
