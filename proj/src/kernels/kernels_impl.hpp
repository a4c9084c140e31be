#pragma once

#include "cglp/kernels.hpp"

namespace cglp::kernels::detail {

double sum_squares_scalar(std::span<const double> x);
void dot2_scalar(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                 double* out_a, double* out_b);
void window_demean_scalar(std::span<const double> x, double offset, std::span<const double> w,
                          std::span<double> out);
void accumulate_power_scalar(std::span<const std::complex<double>> z, std::span<double> acc);
void eval_poly_jw_scalar(std::span<const double> coeffs, std::span<const double> omega,
                         std::span<std::complex<double>> out);

#if defined(CGLP_HAVE_AVX2)
double sum_squares_avx2(std::span<const double> x);
void dot2_avx2(std::span<const double> x, std::span<const double> a, std::span<const double> b,
               double* out_a, double* out_b);
void window_demean_avx2(std::span<const double> x, double offset, std::span<const double> w,
                        std::span<double> out);
void accumulate_power_avx2(std::span<const std::complex<double>> z, std::span<double> acc);
void eval_poly_jw_avx2(std::span<const double> coeffs, std::span<const double> omega,
                       std::span<std::complex<double>> out);
#endif

}  // namespace cglp::kernels::detail
