#include "cglp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "cglp/error.hpp"
#include "cglp/io.hpp"
#include "cglp/kernels.hpp"

namespace cglp {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        if (!in_ || !out_) throw Error("FFT buffer allocation failed");
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
        if (plan_ == nullptr) throw Error("FFT planning failed");
    }
    ~RealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::span<double> input() { return {in_.get(), n_}; }
    std::span<const std::complex<double>> execute() {
        fftw_execute(plan_);
        return {reinterpret_cast<const std::complex<double>*>(out_.get()), n_ / 2 + 1};
    }

private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> in_;
    std::unique_ptr<fftw_complex, FftwFree> out_;
    fftw_plan plan_ = nullptr;
};

}  // namespace

double rms(std::span<const double> x) {
    if (x.empty()) throw InsufficientData("rms of an empty signal");
    return std::sqrt(kernels::active().sum_squares(x) / static_cast<double>(x.size()));
}

double variance(std::span<const double> x) {
    if (x.empty()) throw InsufficientData("variance of an empty signal");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return acc / n;
}

HarmonicEstimate extract_harmonic(std::span<const double> samples, double sample_rate, double f0,
                                  int n, double t0) {
    if (!(sample_rate > 0.0) || !(f0 > 0.0)) {
        throw InvalidParameter("sample rate and base frequency must be positive");
    }
    if (n < 1) throw InvalidParameter("harmonic order must be >= 1");
    if (!(n * f0 < 0.5 * sample_rate)) {
        throw InvalidParameter("harmonic frequency must lie below the Nyquist frequency");
    }
    const double per_period = sample_rate / f0;
    const auto periods =
        static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) / per_period + 1e-9));
    if (periods < 5) {
        throw InsufficientData("harmonic extraction needs at least 5 base periods, got " +
                               std::to_string(periods));
    }
    const auto m = std::min(samples.size(),
                            static_cast<std::size_t>(std::llround(periods * per_period)));
    const std::size_t start = samples.size() - m;

    std::vector<double> s(m), c(m);
    const double w = 2.0 * kPi * n * f0;
    for (std::size_t k = 0; k < m; ++k) {
        const double t = t0 + static_cast<double>(start + k) / sample_rate;
        s[k] = std::sin(w * t);
        c[k] = std::cos(w * t);
    }
    double a = 0.0, b = 0.0;
    kernels::active().dot2(samples.subspan(start), s, c, &a, &b);
    const double scale = 2.0 / static_cast<double>(m);
    HarmonicEstimate h;
    h.order = n;
    h.amplitude = {scale * a, scale * b};
    h.base_frequency_hz = f0;
    h.periods = periods;
    return h;
}

double CpsdCurve::at(double f_hz) const {
    if (frequency_hz.empty()) return 0.0;
    auto it = std::upper_bound(frequency_hz.begin(), frequency_hz.end(), f_hz);
    if (it == frequency_hz.begin()) return 0.0;
    return cumulative[static_cast<std::size_t>(it - frequency_hz.begin()) - 1];
}

CpsdCurve cpsd(std::span<const double> samples, double sample_rate, WelchSettings settings) {
    if (!(sample_rate > 0.0)) throw InvalidParameter("sample rate must be positive");
    const std::size_t seg = settings.segment_length;
    if (seg < 8 || seg % 2 != 0) throw InvalidParameter("segment length must be even and >= 8");
    const std::size_t step = seg / 2;
    if (samples.size() < seg + step) {
        throw InsufficientData("CPSD needs at least two segments of " + std::to_string(seg) +
                               " samples, got " + std::to_string(samples.size()));
    }
    const std::size_t segments = 1 + (samples.size() - seg) / step;

    // Periodic Hann.
    std::vector<double> window(seg);
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(seg));
    }
    const double wss = std::accumulate(window.begin(), window.end(), 0.0,
                                       [](double acc, double v) { return acc + v * v; });

    const auto& k = kernels::active();
    RealFft fft(seg);
    const std::size_t bins = seg / 2 + 1;
    std::vector<double> power(bins, 0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        const auto chunk = samples.subspan(s * step, seg);
        const double mean = std::accumulate(chunk.begin(), chunk.end(), 0.0) / static_cast<double>(seg);
        k.window_demean(chunk, mean, window, fft.input());
        k.accumulate_power(fft.execute(), power);
    }

    const double df = sample_rate / static_cast<double>(seg);
    // One-sided density times df: 2|X|^2 / (fs * sum w^2) * df, with DC and Nyquist not doubled.
    const double base = df / (sample_rate * wss * static_cast<double>(segments));
    CpsdCurve curve;
    curve.segment_length = seg;
    curve.segments = segments;
    curve.frequency_hz.resize(bins);
    curve.cumulative.resize(bins);
    double acc = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        const double factor = (i == 0 || i == bins - 1) ? 1.0 : 2.0;
        acc += factor * base * power[i];
        curve.frequency_hz[i] = static_cast<double>(i) * df;
        curve.cumulative[i] = acc;
    }
    return curve;
}

void write_cpsd_csv(const CpsdCurve& curve, const std::filesystem::path& path,
                    const std::vector<std::string>& header) {
    auto os = io::open_output(path);
    std::vector<std::string> lines = header;
    lines.push_back("welch: hann window, 50% overlap, segment " + std::to_string(curve.segment_length) +
                    " samples, " + std::to_string(curve.segments) + " segments, one-sided");
    io::write_comment_header(os, lines);
    os << "frequency_hz,cumulative_power\n";
    for (std::size_t i = 0; i < curve.frequency_hz.size(); ++i) {
        os << io::fmt(curve.frequency_hz[i]) << ',' << io::fmt(curve.cumulative[i]) << '\n';
    }
}

void write_harmonics_csv(const std::vector<HarmonicEstimate>& table, const std::filesystem::path& path,
                         const std::vector<std::string>& header) {
    auto os = io::open_output(path);
    io::write_comment_header(os, header);
    os << "n,frequency_hz,magnitude,phase_rad\n";
    for (const auto& h : table) {
        os << h.order << ',' << io::fmt(h.order * h.base_frequency_hz) << ',' << io::fmt(h.magnitude())
           << ',' << io::fmt(h.phase()) << '\n';
    }
}

}  // namespace cglp
