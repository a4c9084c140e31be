#include "cglp/hybrid_sim.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "cglp/error.hpp"
#include "cglp/io.hpp"

namespace cglp {

// ---------------------------------------------------------------------------
// Signals

SignalDescriptor SignalDescriptor::sine(double amplitude, double frequency_hz, double phase) {
    SignalDescriptor d;
    d.kind = Kind::sine;
    d.amplitude = amplitude;
    d.frequency_hz = frequency_hz;
    d.phase = phase;
    d.validate();
    return d;
}

SignalDescriptor SignalDescriptor::gaussian_white(double sigma) {
    SignalDescriptor d;
    d.kind = Kind::gaussian_white;
    d.sigma = sigma;
    d.validate();
    return d;
}

SignalDescriptor SignalDescriptor::sum(std::vector<SignalDescriptor> terms) {
    SignalDescriptor d;
    d.kind = Kind::sum;
    d.terms = std::move(terms);
    d.validate();
    return d;
}

void SignalDescriptor::validate() const {
    switch (kind) {
        case Kind::zero:
            return;
        case Kind::sine:
            if (!std::isfinite(amplitude) || !std::isfinite(phase)) {
                throw InvalidParameter("sine amplitude and phase must be finite");
            }
            if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) {
                throw InvalidParameter("sine frequency must be positive");
            }
            return;
        case Kind::gaussian_white:
            if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
                throw InvalidParameter("noise standard deviation must be finite and nonnegative");
            }
            return;
        case Kind::sum:
            for (const auto& t : terms) t.validate();
            return;
    }
}

bool SignalDescriptor::is_zero() const {
    switch (kind) {
        case Kind::zero:
            return true;
        case Kind::sine:
            return amplitude == 0.0;
        case Kind::gaussian_white:
            return sigma == 0.0;
        case Kind::sum:
            for (const auto& t : terms) {
                if (!t.is_zero()) return false;
            }
            return true;
    }
    return true;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

void add_signal(const SignalDescriptor& desc, std::span<const double> time, std::uint64_t seed,
                std::vector<double>& out) {
    switch (desc.kind) {
        case SignalDescriptor::Kind::zero:
            return;
        case SignalDescriptor::Kind::sine: {
            const double w = hz_to_rad(desc.frequency_hz);
            for (std::size_t k = 0; k < time.size(); ++k) {
                out[k] += desc.amplitude * std::sin(w * time[k] + desc.phase);
            }
            return;
        }
        case SignalDescriptor::Kind::gaussian_white: {
            if (desc.sigma == 0.0) return;
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> dist(0.0, desc.sigma);
            for (std::size_t k = 0; k < time.size(); ++k) out[k] += dist(rng);
            return;
        }
        case SignalDescriptor::Kind::sum:
            for (std::size_t i = 0; i < desc.terms.size(); ++i) {
                add_signal(desc.terms[i], time, mix_seed(seed, i), out);
            }
            return;
    }
}

}  // namespace

std::vector<double> generate_signal(const SignalDescriptor& desc, std::span<const double> time,
                                    std::uint64_t seed) {
    desc.validate();
    std::vector<double> out(time.size(), 0.0);
    add_signal(desc, time, seed, out);
    return out;
}

// ---------------------------------------------------------------------------
// Discretization

ZohPair zoh(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, double period) {
    const auto n = A.rows();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    M.topLeftCorner(n, n) = A * period;
    M.topRightCorner(n, 1) = B * period;
    const Eigen::MatrixXd E = M.exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, 1)};
}

DiscreteBlock::DiscreteBlock(const StateSpace& continuous, double delay, double sample_rate) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw InvalidParameter("sample rate must be positive");
    }
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw InvalidParameter("delay must be nonnegative");
    n_ = continuous.states();
    C_ = continuous.C;
    D_ = continuous.D;
    if (n_ > 0) {
        ZohPair d = zoh(continuous.A, continuous.B, 1.0 / sample_rate);
        Ad_ = std::move(d.Ad);
        Bd_ = std::move(d.Bd);
    } else {
        Ad_.resize(0, 0);
        Bd_.resize(0);
    }

    const double total = delay * sample_rate;
    const double nearest = std::round(total);
    if (std::abs(total - nearest) <= 1e-9 * std::max(1.0, total)) {
        delay_int_ = static_cast<int>(nearest);
        delay_frac_ = 0.0;
    } else {
        delay_int_ = static_cast<int>(std::floor(total));
        delay_frac_ = total - delay_int_;
    }

    const auto n = static_cast<std::size_t>(n_);
    ad_.resize(n * n);
    bd_.resize(n);
    c_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        bd_[i] = Bd_[static_cast<Eigen::Index>(i)];
        c_[i] = C_[static_cast<Eigen::Index>(i)];
        for (std::size_t j = 0; j < n; ++j) {
            ad_[i * n + j] = Ad_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    x_.assign(n, 0.0);
    scratch_.assign(n, 0.0);
    history_.assign(static_cast<std::size_t>(delay_int_) + 1, 0.0);
}

double DiscreteBlock::dc_gain() const {
    if (n_ == 0) return D_;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n_, n_) - Ad_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    return (C_ * lu.solve(Bd_))(0, 0) + D_;
}

bool DiscreteBlock::direct_feedthrough() const { return D_ != 0.0 && delay_int_ == 0; }

double DiscreteBlock::delayed_input(double u_now) const {
    const std::size_t size = history_.size();
    auto past = [&](int j) { return history_[(head_ + static_cast<std::size_t>(j)) % size]; };
    const double a = delay_int_ == 0 ? u_now : past(delay_int_ - 1);
    if (delay_frac_ == 0.0) return a;
    return (1.0 - delay_frac_) * a + delay_frac_ * past(delay_int_);
}

double DiscreteBlock::output(double u_now) const {
    double y = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) y += c_[i] * x_[i];
    if (D_ != 0.0) y += D_ * delayed_input(u_now);
    return y;
}

void DiscreteBlock::advance(double u_now) {
    const std::size_t n = x_.size();
    if (n > 0) {
        const double ud = delayed_input(u_now);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = bd_[i] * ud;
            const double* row = &ad_[i * n];
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * x_[j];
            scratch_[i] = acc;
        }
        x_.swap(scratch_);
    }
    const std::size_t size = history_.size();
    head_ = (head_ + size - 1) % size;
    history_[head_] = u_now;
}

void DiscreteBlock::clear() {
    std::fill(x_.begin(), x_.end(), 0.0);
    std::fill(history_.begin(), history_.end(), 0.0);
    head_ = 0;
}

DiscreteBlock discretize(const RationalTF& tf, double sample_rate) {
    return DiscreteBlock(realize(tf), tf.delay(), sample_rate);
}

// ---------------------------------------------------------------------------
// Reset element stepping

ResetStepper::ResetStepper(const ResetElement& element, double sample_rate)
    : element_(element) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw InvalidParameter("sample rate must be positive");
    }
    const int n = element_.states();
    if (n > 0) {
        disc_ = zoh(element_.A(), element_.B(), 1.0 / sample_rate);
    } else {
        disc_.Ad.resize(0, 0);
        disc_.Bd.resize(0);
    }
    x_ = Eigen::VectorXd::Zero(n);
    pre_ = Eigen::VectorXd::Zero(n);
    scratch_ = Eigen::VectorXd::Zero(n);
}

bool ResetStepper::apply_reset(double e_r) {
    const bool crossed = !first_ && e_r * prev_input_ < 0.0;
    if (!(crossed || e_r == 0.0)) return false;
    const Eigen::VectorXd& rho = element_.reset_values();
    bool changed = false;
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
        if (rho[i] * x_[i] != x_[i]) changed = true;
    }
    if (!changed) return false;
    pre_ = x_;
    x_.array() *= rho.array();
    return true;
}

double ResetStepper::output(double e_r) const {
    double y = element_.D() * e_r;
    if (x_.size() > 0) y += element_.C().dot(x_);
    return y;
}

void ResetStepper::advance(double e_r) {
    if (x_.size() > 0) {
        scratch_.noalias() = disc_.Ad * x_;
        scratch_.noalias() += disc_.Bd * e_r;
        x_.swap(scratch_);
    }
    prev_input_ = e_r;
    first_ = false;
}

void ResetStepper::clear() {
    x_.setZero();
    pre_.setZero();
    prev_input_ = 0.0;
    first_ = true;
}

std::vector<double> simulate_reset_element(const ResetElement& element, std::span<const double> input,
                                           double sample_rate, std::vector<double>* event_times) {
    ResetStepper stepper(element, sample_rate);
    std::vector<double> out(input.size());
    for (std::size_t k = 0; k < input.size(); ++k) {
        if (stepper.apply_reset(input[k]) && event_times != nullptr) {
            event_times->push_back(static_cast<double>(k) / sample_rate);
        }
        out[k] = stepper.output(input[k]);
        stepper.advance(input[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed loop

void SimConfig::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw InvalidParameter("sample rate must be positive");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw InvalidParameter("duration must be positive");
    }
    reference.validate();
    disturbance.validate();
    noise.validate();
}

std::size_t SimTrace::tail_start(double fraction) const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidParameter("analysis fraction must lie in (0, 1]");
    }
    const auto n = static_cast<double>(size());
    const auto keep = static_cast<std::size_t>(std::llround(n * fraction));
    return size() - std::min(keep, size());
}

SimTrace simulate(const SimConfig& cfg) {
    cfg.validate();
    const double fs = cfg.sample_rate;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration * fs));
    if (steps < 2) throw InvalidParameter("simulation needs at least two samples");

    DiscreteBlock pre = discretize(cfg.loop.pre_reset, fs);
    DiscreteBlock post = discretize(cfg.loop.post_reset, fs);
    DiscreteBlock plant = discretize(cfg.loop.plant, fs);
    if (plant.direct_feedthrough()) {
        throw InvalidParameter(
            "plant has direct feedthrough without delay; the loop would be algebraic");
    }
    ResetStepper reset(cfg.loop.reset, fs);
    const int nr = cfg.loop.reset.states();

    SimTrace tr;
    tr.sample_rate = fs;
    tr.reset_states = nr;
    tr.t.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) tr.t[k] = static_cast<double>(k) / fs;
    const std::vector<double> r = generate_signal(cfg.reference, tr.t, mix_seed(cfg.seed, 1));
    const std::vector<double> d = generate_signal(cfg.disturbance, tr.t, mix_seed(cfg.seed, 2));
    const std::vector<double> noise = generate_signal(cfg.noise, tr.t, mix_seed(cfg.seed, 3));

    tr.e.resize(steps);
    tr.e_r.resize(steps);
    tr.u_r.resize(steps);
    tr.u.resize(steps);
    tr.y.resize(steps);

    for (std::size_t k = 0; k < steps; ++k) {
        const double y = plant.output(0.0);
        const double e = r[k] - (y + noise[k]);
        const double er = pre.output(e);
        if (reset.apply_reset(er)) {
            tr.event_times.push_back(tr.t[k]);
            const auto before = reset.pre_jump_state();
            const auto after = reset.state();
            tr.event_pre.insert(tr.event_pre.end(), before.begin(), before.end());
            tr.event_post.insert(tr.event_post.end(), after.begin(), after.end());
        }
        const double ur = reset.output(er);
        const double u = post.output(ur);
        if (!std::isfinite(u) || !std::isfinite(y) || std::abs(y) > 1e150 || std::abs(u) > 1e150) {
            throw NumericalError("divergence at t = " + std::to_string(tr.t[k]) + " s");
        }
        tr.e[k] = e;
        tr.e_r[k] = er;
        tr.u_r[k] = ur;
        tr.u[k] = u;
        tr.y[k] = y;

        pre.advance(e);
        reset.advance(er);
        post.advance(ur);
        plant.advance(u + d[k]);
    }
    tr.event_density_warning =
        static_cast<double>(tr.events()) / cfg.duration > fs / 10.0;
    return tr;
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path,
                     const std::vector<std::string>& header) {
    auto os = io::open_output(path);
    io::write_comment_header(os, header);
    os << "t,e,e_r,u_r,u,y\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        os << io::fmt(trace.t[k]) << ',' << io::fmt(trace.e[k]) << ',' << io::fmt(trace.e_r[k])
           << ',' << io::fmt(trace.u_r[k]) << ',' << io::fmt(trace.u[k]) << ','
           << io::fmt(trace.y[k]) << '\n';
    }
}

void write_events_csv(const SimTrace& trace, const std::filesystem::path& path,
                      const std::vector<std::string>& header) {
    auto os = io::open_output(path);
    io::write_comment_header(os, header);
    const auto n = static_cast<std::size_t>(trace.reset_states);
    os << "t_event";
    for (std::size_t i = 0; i < n; ++i) os << ",pre_" << i;
    for (std::size_t i = 0; i < n; ++i) os << ",post_" << i;
    os << '\n';
    for (std::size_t k = 0; k < trace.events(); ++k) {
        os << io::fmt(trace.event_times[k]);
        for (std::size_t i = 0; i < n; ++i) os << ',' << io::fmt(trace.event_pre[k * n + i]);
        for (std::size_t i = 0; i < n; ++i) os << ',' << io::fmt(trace.event_post[k * n + i]);
        os << '\n';
    }
}

}  // namespace cglp
