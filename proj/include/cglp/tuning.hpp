#pragma once

// Controller construction and the noise/harmonics experiments built on it:
// the lead-split sweep and the side-by-side controller comparison.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cglp/hybrid_sim.hpp"
#include "cglp/loop_analysis.hpp"
#include "cglp/spectral.hpp"

namespace cglp {

/// 9836 e^{-0.00027 s} / (s^2 + 8.737 s + 7376).
RationalTF paper_plant();

enum class ControllerVariant { linear, cglp, filtered_cglp };

const char* to_string(ControllerVariant v);
ControllerVariant variant_from_string(const std::string& s);

struct NotchSpec {
    double omega_n_hz = 50.0;
    double q1 = 1.0;
    double q2 = 0.4;
};

/// All frequencies in Hz. Defaults describe the nonlinear controller of the
/// reference design with the lead entirely after the reset element.
struct ControllerSpec {
    ControllerVariant variant = ControllerVariant::cglp;
    std::optional<double> kp;  // unset: normalized to 0 dB at crossover_hz
    double crossover_hz = 150.0;
    double omega_i_hz = 50.0;
    double omega_d_hz = 50.0;
    double omega_t_hz = 450.0;
    double omega_f_hz = 3000.0;
    double omega_r_hz = 150.0;
    std::optional<double> omega_alpha_hz = 114.5;  // unset: derived from omega_r and gamma
    double gamma = 0.2;
    double omega_x_hz = 150.0;
    NotchSpec notch;

    static ControllerSpec paper_linear();
    static ControllerSpec paper_cglp(double omega_x_hz = 150.0);
    static ControllerSpec paper_filtered(double omega_x_hz = 360.0);

    /// Throws ValidationError on inconsistent parameters.
    void validate() const;
    /// GFORE corner actually used [Hz].
    double effective_omega_alpha_hz() const;
};

/// Loop with k_p = 1, before normalization.
LoopTopology build_unit_loop(const ControllerSpec& spec, const RationalTF& plant);
/// k_p from the spec, or the crossover normalization when unset.
double resolve_kp(const ControllerSpec& spec, const RationalTF& plant);
LoopTopology build_loop(const ControllerSpec& spec, const RationalTF& plant = paper_plant());

/// Time-domain scenario shared by the experiments.
struct Scenario {
    double sample_rate = 100e3;
    double duration = 4.0;
    double analysis_fraction = 0.5;
    SignalDescriptor reference;
    SignalDescriptor disturbance = SignalDescriptor::sine(0.25, 40.0);

    static Scenario paper() { return {}; }
    void validate() const;
};

SimConfig make_sim_config(const LoopTopology& loop, const Scenario& scenario, double noise_sigma,
                          std::uint64_t seed);

/// Steady-state RMS of the error over the analysis window.
double steady_state_rms(const SimTrace& trace, double analysis_fraction);

/// Variance of the noise-free plant output over the analysis window.
double signal_power(const LoopTopology& loop, const Scenario& scenario);

/// 10 log10(P_signal / sigma^2); +inf for sigma = 0.
double snr_of(const LoopTopology& loop, double noise_sigma, const Scenario& scenario);

/// Noise standard deviation that gives snr_db on this loop and scenario.
double sigma_for_snr(const LoopTopology& loop, double snr_db, const Scenario& scenario);

struct SweepSettings {
    std::size_t grid_points = 25;
    std::size_t seeds = 5;
    std::uint64_t base_seed = 1;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepPoint {
    double omega_x_hz = 0.0;
    std::vector<double> rms;  // one per seed
    double rms_mean = 0.0;
    double rms_std = 0.0;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    double snr_target_db = 0.0;
    double snr_achieved_db = 0.0;
    double noise_sigma = 0.0;
    double kp = 0.0;
    std::vector<SweepPoint> points;
    std::optional<std::size_t> argmin;

    std::optional<double> argmin_hz() const;
    /// The minimum is neither the first nor the last successful point.
    bool interior_minimum() const;
    std::size_t failures() const;
};

/// For each SNR target: log grid of omega_x over [omega_r, omega_f], seed-averaged
/// steady-state RMS of the error per point. The noise level is fixed per target
/// from the loop with omega_x = omega_r. Points run concurrently; a diverging
/// point is recorded as failed and left out of the argmin.
std::vector<SweepResult> sweep_omega_x(const ControllerSpec& base, const RationalTF& plant,
                                       const Scenario& scenario, const std::vector<double>& snr_targets_db,
                                       const SweepSettings& settings = {});

/// seed = hash(base, point index, repetition).
std::uint64_t sweep_seed(std::uint64_t base, std::size_t point, std::size_t repetition);

struct LabeledSpec {
    std::string label;
    ControllerSpec spec;
};

/// Linear; lead after reset; lead before reset; split at 360 Hz; split at 360 Hz with notch.
std::vector<LabeledSpec> paper_comparison_specs();

struct ComparisonEntry {
    std::string label;
    ControllerSpec spec;
    double kp = 0.0;
    HosidfCurve s1;
    HosidfCurve s3;
    CpsdCurve cpsd;
    double rms = 0.0;
    bool failed = false;
    std::string error;
};

struct ComparisonReport {
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::vector<ComparisonEntry> entries;
    /// Labels sorted by final CPSD value, largest first.
    std::vector<std::string> ordering() const;
    const ComparisonEntry& find(const std::string& label) const;
};

/// Throws InvalidParameter for fewer than two specs.
ComparisonReport compare_controllers(const std::vector<LabeledSpec>& specs, const RationalTF& plant,
                                     const Scenario& scenario, double noise_sigma, std::uint64_t seed,
                                     const FrequencyGrid& grid = FrequencyGrid::standard());

/// sweep_<i>.csv per SNR target plus sweep_summary.json.
void write_sweep_report(const std::vector<SweepResult>& results, const std::filesystem::path& dir,
                        const std::vector<std::string>& header);
/// Per-entry sensitivity and CPSD CSVs plus comparison_summary.json.
void write_comparison_report(const ComparisonReport& report, const std::filesystem::path& dir,
                             const std::vector<std::string>& header);

}  // namespace cglp
