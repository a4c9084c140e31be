#include "kernels_impl.hpp"

#include <cassert>

namespace cglp::kernels::detail {

double sum_squares_scalar(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

void dot2_scalar(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                 double* out_a, double* out_b) {
    assert(a.size() == x.size() && b.size() == x.size());
    double sa = 0.0;
    double sb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sa += x[i] * a[i];
        sb += x[i] * b[i];
    }
    *out_a = sa;
    *out_b = sb;
}

void window_demean_scalar(std::span<const double> x, double offset, std::span<const double> w,
                          std::span<double> out) {
    assert(w.size() == x.size() && out.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - offset) * w[i];
}

void accumulate_power_scalar(std::span<const std::complex<double>> z, std::span<double> acc) {
    assert(acc.size() == z.size());
    for (std::size_t i = 0; i < z.size(); ++i) acc[i] += std::norm(z[i]);
}

void eval_poly_jw_scalar(std::span<const double> coeffs, std::span<const double> omega,
                         std::span<std::complex<double>> out) {
    assert(out.size() == omega.size());
    const std::size_t n = coeffs.size();
    for (std::size_t i = 0; i < omega.size(); ++i) {
        // Horner on p(jw): (re + j im) * (j w) = -im*w + j re*w
        const double w = omega[i];
        double re = 0.0;
        double im = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            const double next_re = -im * w + coeffs[k];
            const double next_im = re * w;
            re = next_re;
            im = next_im;
        }
        out[i] = {re, im};
    }
}

}  // namespace cglp::kernels::detail
