#pragma once

// Data-parallel inner loops used by the frequency-domain and spectral code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled in its own translation unit. The variant is
// chosen once at first use from CPUID; setting CGLP_SIMD=scalar in the
// environment forces the reference path.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace cglp::kernels {

struct KernelTable {
    std::string_view name;

    /// sum_i x[i]^2
    double (*sum_squares)(std::span<const double> x);

    /// Returns (sum_i x[i]*a[i], sum_i x[i]*b[i]).
    void (*dot2)(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                 double* out_a, double* out_b);

    /// out[i] = (x[i] - offset) * w[i]
    void (*window_demean)(std::span<const double> x, double offset, std::span<const double> w,
                          std::span<double> out);

    /// acc[i] += |z[i]|^2
    void (*accumulate_power)(std::span<const std::complex<double>> z, std::span<double> acc);

    /// out[i] = sum_k coeffs[k] * (j*omega[i])^k, coefficients in ascending powers.
    void (*eval_poly_jw)(std::span<const double> coeffs, std::span<const double> omega,
                         std::span<std::complex<double>> out);
};

/// Portable reference implementation.
const KernelTable& scalar();

/// AVX2+FMA implementation, or nullptr when the CPU or build lacks it.
const KernelTable* avx2();

/// The table selected for this process.
const KernelTable& active();

}  // namespace cglp::kernels
