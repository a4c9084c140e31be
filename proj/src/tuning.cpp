#include "cglp/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "cglp/error.hpp"
#include "cglp/io.hpp"

namespace cglp {

RationalTF paper_plant() { return RationalTF({9836.0}, {7376.0, 8.737, 1.0}, 0.00027); }

const char* to_string(ControllerVariant v) {
    switch (v) {
        case ControllerVariant::linear:
            return "linear";
        case ControllerVariant::cglp:
            return "cglp";
        case ControllerVariant::filtered_cglp:
            return "filtered_cglp";
    }
    return "?";
}

ControllerVariant variant_from_string(const std::string& s) {
    if (s == "linear") return ControllerVariant::linear;
    if (s == "cglp") return ControllerVariant::cglp;
    if (s == "filtered_cglp") return ControllerVariant::filtered_cglp;
    throw ValidationError("unknown controller variant '" + s +
                          "' (expected linear, cglp or filtered_cglp)");
}

ControllerSpec ControllerSpec::paper_linear() {
    ControllerSpec s;
    s.variant = ControllerVariant::linear;
    s.omega_i_hz = 15.0;
    return s;
}

ControllerSpec ControllerSpec::paper_cglp(double omega_x_hz) {
    ControllerSpec s;
    s.omega_x_hz = omega_x_hz;
    return s;
}

ControllerSpec ControllerSpec::paper_filtered(double omega_x_hz) {
    ControllerSpec s;
    s.variant = ControllerVariant::filtered_cglp;
    s.omega_x_hz = omega_x_hz;
    return s;
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void ControllerSpec::validate() const {
    require(!kp || positive(*kp), "kp must be positive");
    require(positive(crossover_hz), "crossover_hz must be positive");
    require(positive(omega_i_hz), "omega_i_hz must be positive");
    require(positive(omega_d_hz), "omega_d_hz must be positive");
    require(positive(omega_t_hz), "omega_t_hz must be positive");
    require(positive(omega_f_hz), "omega_f_hz must be positive");
    require(omega_d_hz < omega_t_hz, "omega_d_hz must be below omega_t_hz");
    if (variant == ControllerVariant::linear) return;
    require(positive(omega_r_hz), "omega_r_hz must be positive");
    require(omega_r_hz < omega_f_hz, "omega_r_hz must be below omega_f_hz");
    require(gamma > -1.0 && gamma <= 1.0, "gamma must lie in (-1, 1]");
    require(!omega_alpha_hz || positive(*omega_alpha_hz), "omega_alpha_hz must be positive");
    require(omega_x_hz >= omega_r_hz && omega_x_hz <= omega_f_hz,
            "omega_x_hz must lie in [omega_r_hz, omega_f_hz]");
    if (variant == ControllerVariant::filtered_cglp) {
        require(positive(notch.omega_n_hz), "notch omega_n_hz must be positive");
        require(positive(notch.q1) && positive(notch.q2), "notch q1 and q2 must be positive");
        require(notch.q2 <= notch.q1, "notch q2 must not exceed q1");
    }
}

double ControllerSpec::effective_omega_alpha_hz() const {
    if (omega_alpha_hz) return *omega_alpha_hz;
    return rad_to_hz(gfore_corner_from_target(hz_to_rad(omega_r_hz), gamma));
}

LoopTopology build_unit_loop(const ControllerSpec& spec, const RationalTF& plant) {
    spec.validate();
    const RationalTF pid = make_pid(
        1.0, PidCorners{hz_to_rad(spec.omega_i_hz), hz_to_rad(spec.omega_d_hz), hz_to_rad(spec.omega_t_hz)});
    if (spec.variant == ControllerVariant::linear) {
        // The low-pass runs through the simulator as a reset element that never jumps.
        return {RationalTF::unity(), make_gfore(hz_to_rad(spec.omega_f_hz), 1.0), pid, plant};
    }
    const SplitLead lead =
        make_split_lead(hz_to_rad(spec.omega_r_hz), hz_to_rad(spec.omega_x_hz), hz_to_rad(spec.omega_f_hz));
    const ResetElement r = make_gfore(hz_to_rad(spec.effective_omega_alpha_hz()), spec.gamma);
    if (spec.variant == ControllerVariant::cglp) return {lead.pre, r, series(lead.post, pid), plant};
    const NotchPair n = make_notch(hz_to_rad(spec.notch.omega_n_hz), spec.notch.q1, spec.notch.q2);
    return {series(lead.pre, n.notch), r, series(series(lead.post, n.inverse), pid), plant};
}

double resolve_kp(const ControllerSpec& spec, const RationalTF& plant) {
    if (spec.kp) {
        spec.validate();
        return *spec.kp;
    }
    return normalize_kp(build_unit_loop(spec, plant), hz_to_rad(spec.crossover_hz));
}

LoopTopology build_loop(const ControllerSpec& spec, const RationalTF& plant) {
    LoopTopology loop = build_unit_loop(spec, plant);
    const double kp = spec.kp ? *spec.kp : normalize_kp(loop, hz_to_rad(spec.crossover_hz));
    loop.post_reset = series(loop.post_reset, RationalTF::gain(kp));
    return loop;
}

// ---------------------------------------------------------------------------
// Scenario and SNR

void Scenario::validate() const {
    if (!positive(sample_rate)) throw ValidationError("sample_rate_hz must be positive");
    if (!positive(duration)) throw ValidationError("duration_s must be positive");
    if (!(analysis_fraction > 0.0 && analysis_fraction <= 1.0)) {
        throw ValidationError("analysis_fraction must lie in (0, 1]");
    }
    reference.validate();
    disturbance.validate();
}

SimConfig make_sim_config(const LoopTopology& loop, const Scenario& scenario, double noise_sigma,
                          std::uint64_t seed) {
    scenario.validate();
    return SimConfig{loop,
                     scenario.sample_rate,
                     scenario.duration,
                     scenario.reference,
                     scenario.disturbance,
                     noise_sigma > 0.0 ? SignalDescriptor::gaussian_white(noise_sigma) : SignalDescriptor::zero(),
                     seed};
}

double steady_state_rms(const SimTrace& trace, double analysis_fraction) {
    const std::size_t start = trace.tail_start(analysis_fraction);
    return rms(std::span<const double>(trace.e).subspan(start));
}

double signal_power(const LoopTopology& loop, const Scenario& scenario) {
    const SimTrace tr = simulate(make_sim_config(loop, scenario, 0.0, 0));
    return variance(std::span<const double>(tr.y).subspan(tr.tail_start(scenario.analysis_fraction)));
}

double snr_of(const LoopTopology& loop, double noise_sigma, const Scenario& scenario) {
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw InvalidParameter("noise standard deviation must be finite and nonnegative");
    }
    if (noise_sigma == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal_power(loop, scenario) / (noise_sigma * noise_sigma));
}

double sigma_for_snr(const LoopTopology& loop, double snr_db, const Scenario& scenario) {
    if (!std::isfinite(snr_db)) throw InvalidParameter("SNR target must be finite");
    // The signal is noise-free, so the definition inverts in closed form.
    return std::sqrt(signal_power(loop, scenario) / std::pow(10.0, snr_db / 10.0));
}

// ---------------------------------------------------------------------------
// Sweep

std::uint64_t sweep_seed(std::uint64_t base, std::size_t point, std::size_t repetition) {
    return mix_seed(mix_seed(base, point), repetition);
}

std::optional<double> SweepResult::argmin_hz() const {
    if (!argmin) return std::nullopt;
    return points[*argmin].omega_x_hz;
}

bool SweepResult::interior_minimum() const {
    if (!argmin) return false;
    std::size_t first = points.size(), last = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].failed) continue;
        first = std::min(first, i);
        last = std::max(last, i);
    }
    return *argmin != first && *argmin != last;
}

std::size_t SweepResult::failures() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return p.failed; }));
}

namespace {

// Runs job(i) for i in [0, count) on a small pool of threads.
template <class Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
    unsigned n = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, count));
    if (n <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<SweepResult> sweep_omega_x(const ControllerSpec& base, const RationalTF& plant,
                                       const Scenario& scenario, const std::vector<double>& snr_targets_db,
                                       const SweepSettings& settings) {
    if (base.variant == ControllerVariant::linear) {
        throw InvalidParameter("the omega_x sweep needs a reset controller");
    }
    if (settings.grid_points < 5) throw InvalidParameter("sweep grid needs at least 5 points");
    if (settings.seeds < 1) throw InvalidParameter("sweep needs at least one seed per point");
    base.validate();
    scenario.validate();

    ControllerSpec ref_spec = base;
    ref_spec.omega_x_hz = base.omega_r_hz;
    const double kp = resolve_kp(ref_spec, plant);
    ref_spec.kp = kp;
    const double p_signal = signal_power(build_loop(ref_spec, plant), scenario);

    const std::vector<double> grid = [&] {
        const FrequencyGrid g = FrequencyGrid::log_spaced_hz(base.omega_r_hz, base.omega_f_hz, settings.grid_points);
        std::vector<double> hz;
        for (double w : g.omega()) hz.push_back(rad_to_hz(w));
        hz.front() = base.omega_r_hz;  // exact end points
        hz.back() = base.omega_f_hz;
        return hz;
    }();

    // Loops depend on omega_x only; build them once and share read-only.
    std::vector<std::optional<LoopTopology>> loops(grid.size());
    std::vector<std::string> build_errors(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ControllerSpec s = base;
        s.omega_x_hz = grid[i];
        s.kp = kp;
        try {
            loops[i] = build_loop(s, plant);
        } catch (const Error& e) {
            build_errors[i] = e.what();
        }
    }

    std::vector<SweepResult> results;
    for (double target : snr_targets_db) {
        SweepResult res;
        res.snr_target_db = target;
        res.kp = kp;
        res.noise_sigma = std::sqrt(p_signal / std::pow(10.0, target / 10.0));
        res.snr_achieved_db = 10.0 * std::log10(p_signal / (res.noise_sigma * res.noise_sigma));
        res.points.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            res.points[i].omega_x_hz = grid[i];
            res.points[i].rms.assign(settings.seeds, 0.0);
            if (!loops[i]) {
                res.points[i].failed = true;
                res.points[i].error = build_errors[i];
            }
        }

        std::mutex err_mutex;
        parallel_for(grid.size() * settings.seeds, settings.threads, [&](std::size_t job) {
            const std::size_t i = job / settings.seeds;
            const std::size_t rep = job % settings.seeds;
            if (!loops[i]) return;
            try {
                const SimTrace tr =
                    simulate(make_sim_config(*loops[i], scenario, res.noise_sigma, sweep_seed(settings.base_seed, i, rep)));
                res.points[i].rms[rep] = steady_state_rms(tr, scenario.analysis_fraction);
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                res.points[i].failed = true;
                if (res.points[i].error.empty()) res.points[i].error = e.what();
            }
        });

        for (std::size_t i = 0; i < grid.size(); ++i) {
            SweepPoint& p = res.points[i];
            if (p.failed) continue;
            const double n = static_cast<double>(p.rms.size());
            p.rms_mean = std::accumulate(p.rms.begin(), p.rms.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : p.rms) ss += (v - p.rms_mean) * (v - p.rms_mean);
            p.rms_std = p.rms.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            if (!res.argmin || p.rms_mean < res.points[*res.argmin].rms_mean) res.argmin = i;
        }
        results.push_back(std::move(res));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Comparison

std::vector<LabeledSpec> paper_comparison_specs() {
    return {
        {"linear", ControllerSpec::paper_linear()},
        {"cglp_wx_wr", ControllerSpec::paper_cglp(150.0)},
        {"cglp_wx_wf", ControllerSpec::paper_cglp(3000.0)},
        {"cglp_wx_360", ControllerSpec::paper_cglp(360.0)},
        {"filtered_cglp_wx_360", ControllerSpec::paper_filtered(360.0)},
    };
}

std::vector<std::string> ComparisonReport::ordering() const {
    std::vector<const ComparisonEntry*> ok;
    for (const auto& e : entries) {
        if (!e.failed) ok.push_back(&e);
    }
    std::stable_sort(ok.begin(), ok.end(), [](const ComparisonEntry* a, const ComparisonEntry* b) {
        return a->cpsd.total() > b->cpsd.total();
    });
    std::vector<std::string> out;
    for (const auto* e : ok) out.push_back(e->label);
    return out;
}

const ComparisonEntry& ComparisonReport::find(const std::string& label) const {
    for (const auto& e : entries) {
        if (e.label == label) return e;
    }
    throw InvalidParameter("no comparison entry labelled '" + label + "'");
}

ComparisonReport compare_controllers(const std::vector<LabeledSpec>& specs, const RationalTF& plant,
                                     const Scenario& scenario, double noise_sigma, std::uint64_t seed,
                                     const FrequencyGrid& grid) {
    if (specs.size() < 2) throw InvalidParameter("comparison needs at least two controllers");
    scenario.validate();
    ComparisonReport report;
    report.noise_sigma = noise_sigma;
    report.seed = seed;
    report.entries.resize(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        report.entries[i].label = specs[i].label;
        report.entries[i].spec = specs[i].spec;
    }
    parallel_for(specs.size(), 0, [&](std::size_t i) {
        ComparisonEntry& e = report.entries[i];
        try {
            e.kp = resolve_kp(e.spec, plant);
            ControllerSpec fixed = e.spec;
            fixed.kp = e.kp;
            const LoopTopology loop = build_loop(fixed, plant);
            e.s1 = sensitivity_curve(loop, grid, 1);
            e.s3 = sensitivity_curve(loop, grid, 3);
            // Same seed for every controller: identical noise realizations.
            const SimTrace tr = simulate(make_sim_config(loop, scenario, noise_sigma, seed));
            const auto tail = std::span<const double>(tr.e).subspan(tr.tail_start(scenario.analysis_fraction));
            e.rms = rms(tail);
            e.cpsd = cpsd(tail, scenario.sample_rate);
        } catch (const Error& ex) {
            e.failed = true;
            e.error = ex.what();
        }
    });
    return report;
}

// ---------------------------------------------------------------------------
// Reports

void write_sweep_report(const std::vector<SweepResult>& results, const std::filesystem::path& dir,
                        const std::vector<std::string>& header) {
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
        const SweepResult& r = results[k];
        const std::string name = "sweep_" + std::to_string(k) + ".csv";
        auto os = io::open_output(dir / name);
        std::vector<std::string> lines = header;
        lines.push_back("snr_target_db=" + io::fmt(r.snr_target_db) + " noise_sigma=" + io::fmt(r.noise_sigma));
        io::write_comment_header(os, lines);
        os << "omega_x_hz,rms_mean,rms_std,failed";
        const std::size_t seeds = r.points.empty() ? 0 : r.points.front().rms.size();
        for (std::size_t s = 0; s < seeds; ++s) os << ",rms_seed_" << s;
        os << '\n';
        nlohmann::json table = nlohmann::json::array();
        for (const SweepPoint& p : r.points) {
            os << io::fmt(p.omega_x_hz) << ',' << io::fmt(p.rms_mean) << ',' << io::fmt(p.rms_std) << ','
               << (p.failed ? 1 : 0);
            for (double v : p.rms) os << ',' << io::fmt(v);
            os << '\n';
            nlohmann::json row{{"omega_x_hz", p.omega_x_hz}, {"rms_mean", p.rms_mean}, {"rms_std", p.rms_std}};
            if (p.failed) row["error"] = p.error;
            table.push_back(row);
        }
        nlohmann::json entry{{"file", name},
                             {"snr_target_db", r.snr_target_db},
                             {"snr_achieved_db", r.snr_achieved_db},
                             {"noise_sigma", r.noise_sigma},
                             {"kp", r.kp},
                             {"failed_points", r.failures()},
                             {"interior_minimum", r.interior_minimum()},
                             {"rms_table", table}};
        entry["argmin_omega_x_hz"] = r.argmin_hz() ? nlohmann::json(*r.argmin_hz()) : nlohmann::json(nullptr);
        summary.push_back(entry);
    }
    auto os = io::open_output(dir / "sweep_summary.json");
    os << nlohmann::json{{"metadata", header}, {"results", summary}}.dump(2) << '\n';
}

void write_comparison_report(const ComparisonReport& report, const std::filesystem::path& dir,
                             const std::vector<std::string>& header) {
    nlohmann::json entries = nlohmann::json::array();
    for (const ComparisonEntry& e : report.entries) {
        nlohmann::json j{{"label", e.label}, {"variant", to_string(e.spec.variant)}};
        if (e.failed) {
            j["error"] = e.error;
            entries.push_back(j);
            continue;
        }
        {
            auto os = io::open_output(dir / (e.label + "_sensitivity.csv"));
            io::write_comment_header(os, header);
            os << "f_hz,abs_s1,abs_s3\n";
            for (std::size_t i = 0; i < e.s1.omega.size(); ++i) {
                os << io::fmt(rad_to_hz(e.s1.omega[i])) << ',' << io::fmt(std::abs(e.s1.values[i])) << ','
                   << io::fmt(std::abs(e.s3.values[i])) << '\n';
            }
        }
        write_cpsd_csv(e.cpsd, dir / (e.label + "_cpsd.csv"), header);
        j["kp"] = e.kp;
        j["rms"] = e.rms;
        j["cpsd_final"] = e.cpsd.total();
        entries.push_back(j);
    }
    auto os = io::open_output(dir / "comparison_summary.json");
    os << nlohmann::json{{"metadata", header},
                         {"noise_sigma", report.noise_sigma},
                         {"seed", report.seed},
                         {"entries", entries},
                         {"ordering_by_cpsd_final", report.ordering()}}
              .dump(2)
       << '\n';
}

}  // namespace cglp
