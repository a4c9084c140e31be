// AVX2+FMA variants of the kernels in kernels_scalar.cpp.
// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include "kernels_impl.hpp"

#include <cassert>
#include <immintrin.h>

namespace cglp::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double sum_squares_avx2(std::span<const double> x) {
    const std::size_t n = x.size();
    const double* p = x.data();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d a = _mm256_loadu_pd(p + i);
        const __m256d b = _mm256_loadu_pd(p + i + 4);
        acc0 = _mm256_fmadd_pd(a, a, acc0);
        acc1 = _mm256_fmadd_pd(b, b, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += p[i] * p[i];
    return acc;
}

void dot2_avx2(std::span<const double> x, std::span<const double> a, std::span<const double> b,
               double* out_a, double* out_b) {
    assert(a.size() == x.size() && b.size() == x.size());
    const std::size_t n = x.size();
    __m256d sa = _mm256_setzero_pd();
    __m256d sb = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        sa = _mm256_fmadd_pd(xv, _mm256_loadu_pd(a.data() + i), sa);
        sb = _mm256_fmadd_pd(xv, _mm256_loadu_pd(b.data() + i), sb);
    }
    double ra = hsum(sa);
    double rb = hsum(sb);
    for (; i < n; ++i) {
        ra += x[i] * a[i];
        rb += x[i] * b[i];
    }
    *out_a = ra;
    *out_b = rb;
}

void window_demean_avx2(std::span<const double> x, double offset, std::span<const double> w,
                        std::span<double> out) {
    assert(w.size() == x.size() && out.size() == x.size());
    const std::size_t n = x.size();
    const __m256d off = _mm256_set1_pd(offset);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), off);
        _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(v, _mm256_loadu_pd(w.data() + i)));
    }
    for (; i < n; ++i) out[i] = (x[i] - offset) * w[i];
}

void accumulate_power_avx2(std::span<const std::complex<double>> z, std::span<double> acc) {
    assert(acc.size() == z.size());
    const std::size_t n = z.size();
    const double* p = reinterpret_cast<const double*>(z.data());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(p + 2 * i);      // r0 i0 r1 i1
        const __m256d b = _mm256_loadu_pd(p + 2 * i + 4);  // r2 i2 r3 i3
        // hadd gives |z0|^2 |z2|^2 |z1|^2 |z3|^2
        const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
        const __m256d ordered = _mm256_permute4x64_pd(h, 0b11011000);
        _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), ordered));
    }
    for (; i < n; ++i) acc[i] += std::norm(z[i]);
}

void eval_poly_jw_avx2(std::span<const double> coeffs, std::span<const double> omega,
                       std::span<std::complex<double>> out) {
    assert(out.size() == omega.size());
    const std::size_t n = omega.size();
    const std::size_t order = coeffs.size();
    double* dst = reinterpret_cast<double*>(out.data());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d w = _mm256_loadu_pd(omega.data() + i);
        __m256d re = _mm256_setzero_pd();
        __m256d im = _mm256_setzero_pd();
        for (std::size_t k = order; k-- > 0;) {
            const __m256d next_re = _mm256_fnmadd_pd(im, w, _mm256_set1_pd(coeffs[k]));
            im = _mm256_mul_pd(re, w);
            re = next_re;
        }
        const __m256d lo = _mm256_unpacklo_pd(re, im);  // r0 i0 r2 i2
        const __m256d hi = _mm256_unpackhi_pd(re, im);  // r1 i1 r3 i3
        _mm256_storeu_pd(dst + 2 * i, _mm256_permute2f128_pd(lo, hi, 0x20));
        _mm256_storeu_pd(dst + 2 * i + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
    }
    if (i < n) {
        eval_poly_jw_scalar(coeffs, omega.subspan(i), out.subspan(i));
    }
}

}  // namespace cglp::kernels::detail
