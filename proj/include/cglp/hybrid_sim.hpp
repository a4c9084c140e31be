#pragma once

// Fixed-step simulation of the reset control loop.
//
// Every LTI block is replaced by its zero-order-hold equivalent at the
// simulation rate. The reset element integrates between zero crossings of its
// input and jumps x <- A_rho x at the first sample on or after a crossing,
// before that sample's output is formed.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglp/loop_analysis.hpp"
#include "cglp/lti.hpp"
#include "cglp/reset_element.hpp"

namespace cglp {

// ---------------------------------------------------------------------------
// Signals

struct SignalDescriptor {
    enum class Kind { zero, sine, gaussian_white, sum };

    Kind kind = Kind::zero;
    double amplitude = 0.0;
    double frequency_hz = 0.0;
    double phase = 0.0;  // rad
    double sigma = 0.0;
    std::vector<SignalDescriptor> terms;

    static SignalDescriptor zero() { return {}; }
    static SignalDescriptor sine(double amplitude, double frequency_hz, double phase = 0.0);
    static SignalDescriptor gaussian_white(double sigma);
    static SignalDescriptor sum(std::vector<SignalDescriptor> terms);

    void validate() const;
    bool is_zero() const;
};

/// Samples of desc at the given times. Deterministic in seed; summed terms draw
/// from independent streams derived from it.
std::vector<double> generate_signal(const SignalDescriptor& desc, std::span<const double> time,
                                    std::uint64_t seed);

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// ---------------------------------------------------------------------------
// Discrete blocks

/// ZOH equivalent of a continuous state space over one step of length period.
struct ZohPair {
    Eigen::MatrixXd Ad;
    Eigen::VectorXd Bd;
};
ZohPair zoh(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, double period);

/// Discrete-time SISO block with an input delay line. The delay is split into
/// a whole number of samples plus a fraction realized by linear interpolation.
class DiscreteBlock {
public:
    DiscreteBlock(const StateSpace& continuous, double delay, double sample_rate);

    int states() const { return n_; }
    int delay_samples() const { return delay_int_; }
    double delay_fraction() const { return delay_frac_; }
    const Eigen::MatrixXd& Ad() const { return Ad_; }
    const Eigen::VectorXd& Bd() const { return Bd_; }
    const Eigen::RowVectorXd& C() const { return C_; }
    double D() const { return D_; }

    /// Steady-state gain of the discrete block; +inf for a pole at z = 1.
    double dc_gain() const;

    /// True when the current output depends on the current input sample.
    bool direct_feedthrough() const;

    /// y[k] given the current input u[k].
    double output(double u_now) const;
    /// Moves to step k+1 after u[k] is known.
    void advance(double u_now);
    void clear();

    std::span<const double> state() const { return x_; }

private:
    double delayed_input(double u_now) const;

    int n_ = 0;
    Eigen::MatrixXd Ad_;
    Eigen::VectorXd Bd_;
    Eigen::RowVectorXd C_;
    double D_ = 0.0;
    int delay_int_ = 0;
    double delay_frac_ = 0.0;

    // Row-major copies for the stepping loop.
    std::vector<double> ad_;
    std::vector<double> bd_;
    std::vector<double> c_;
    std::vector<double> x_;
    std::vector<double> scratch_;
    std::vector<double> history_;  // history_[(head_ + j) % size] = u[k-1-j]
    std::size_t head_ = 0;
};

/// ZOH discretization of a proper transfer function.
DiscreteBlock discretize(const RationalTF& tf, double sample_rate);

/// Reset element stepped at a fixed rate. The jump is applied when the input
/// changes sign between consecutive samples or is exactly zero, provided the
/// jump changes the state.
class ResetStepper {
public:
    ResetStepper(const ResetElement& element, double sample_rate);

    /// Checks the reset condition for input e_r[k] and applies the jump.
    /// Returns true when the state changed.
    bool apply_reset(double e_r);
    /// u_r[k] from the (possibly jumped) state.
    double output(double e_r) const;
    void advance(double e_r);
    void clear();

    std::span<const double> state() const { return {x_.data(), static_cast<std::size_t>(x_.size())}; }
    /// State just before the most recent jump.
    std::span<const double> pre_jump_state() const {
        return {pre_.data(), static_cast<std::size_t>(pre_.size())};
    }
    const ResetElement& element() const { return element_; }
    const ZohPair& discrete() const { return disc_; }

private:
    ResetElement element_;
    ZohPair disc_;
    Eigen::VectorXd x_;
    Eigen::VectorXd pre_;
    Eigen::VectorXd scratch_;
    double prev_input_ = 0.0;
    bool first_ = true;
};

/// Reset element alone, driven by the sampled input. Event times are appended
/// when requested.
std::vector<double> simulate_reset_element(const ResetElement& element, std::span<const double> input,
                                           double sample_rate,
                                           std::vector<double>* event_times = nullptr);

// ---------------------------------------------------------------------------
// Closed loop

struct SimConfig {
    LoopTopology loop;
    double sample_rate = 100e3;  // Hz
    double duration = 4.0;       // s
    SignalDescriptor reference;
    SignalDescriptor disturbance;
    SignalDescriptor noise;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimTrace {
    double sample_rate = 0.0;
    std::vector<double> t;
    std::vector<double> e;
    std::vector<double> e_r;
    std::vector<double> u_r;
    std::vector<double> u;
    std::vector<double> y;

    int reset_states = 0;
    std::vector<double> event_times;
    std::vector<double> event_pre;   // reset_states values per event
    std::vector<double> event_post;  // reset_states values per event

    /// Set when the event rate exceeds sample_rate / 10.
    bool event_density_warning = false;

    std::size_t size() const { return t.size(); }
    std::size_t events() const { return event_times.size(); }
    /// Index of the first sample of the trailing fraction of the run.
    std::size_t tail_start(double fraction) const;
};

/// Throws NumericalError("divergence at t = ...") on non-finite signals.
SimTrace simulate(const SimConfig& cfg);

/// Columns t,e,e_r,u_r,u,y. header lines are written first, each prefixed "# ".
void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path,
                     const std::vector<std::string>& header = {});
/// Columns t_event, pre_0.., post_0..
void write_events_csv(const SimTrace& trace, const std::filesystem::path& path,
                      const std::vector<std::string>& header = {});

}  // namespace cglp
