#pragma once

// Post-processing of sampled signals: RMS, harmonic extraction over whole
// periods, and the cumulative power spectral density of a Welch estimate.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cglp {

/// sqrt(mean(x^2)). Throws InsufficientData on empty input.
double rms(std::span<const double> x);

/// Sample variance about the mean (divides by N).
double variance(std::span<const double> x);

struct HarmonicEstimate {
    int order = 1;
    std::complex<double> amplitude;  // A e^{j phi} for A sin(n w t + phi)
    double base_frequency_hz = 0.0;
    std::size_t periods = 0;

    double magnitude() const { return std::abs(amplitude); }
    double phase() const { return std::arg(amplitude); }
};

/// Fourier coefficient at n*f0 over the trailing whole number of base periods.
/// t0 is the time stamp of samples[0], so the phase refers to absolute time.
/// Throws InsufficientData with fewer than 5 periods, InvalidParameter when
/// n*f0 is not below Nyquist.
HarmonicEstimate extract_harmonic(std::span<const double> samples, double sample_rate, double f0,
                                  int n, double t0 = 0.0);

struct WelchSettings {
    std::size_t segment_length = std::size_t{1} << 14;
    // Hann window and 50% overlap are fixed.
};

struct CpsdCurve {
    std::vector<double> frequency_hz;
    std::vector<double> cumulative;  // signal units^2
    std::size_t segment_length = 0;
    std::size_t segments = 0;

    double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
    /// Cumulative power at the largest bin not above f.
    double at(double f_hz) const;
};

/// One-sided Welch PSD (Hann, 50% overlap, mean removed per segment),
/// integrated over frequency. Throws InsufficientData below two segments.
CpsdCurve cpsd(std::span<const double> samples, double sample_rate, WelchSettings settings = {});

void write_cpsd_csv(const CpsdCurve& curve, const std::filesystem::path& path,
                    const std::vector<std::string>& header = {});
/// Columns n, magnitude, phase_rad.
void write_harmonics_csv(const std::vector<HarmonicEstimate>& table, const std::filesystem::path& path,
                         const std::vector<std::string>& header = {});

}  // namespace cglp
