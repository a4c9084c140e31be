// Command-line front end: frequency-domain curves, simulations and sweeps.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cglp/config.hpp"
#include "cglp/error.hpp"
#include "cglp/io.hpp"
#include "cglp/kernels.hpp"
#include "cglp/validation.hpp"

namespace fs = std::filesystem;
using namespace cglp;

namespace {

struct Options {
    std::string config_path;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_points;
    std::vector<int> harmonics;
    bool validate = false;
};

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    std::vector<std::string> header;
};

Context prepare(const Options& opt, const std::string& command) {
    Context ctx;
    if (!opt.config_path.empty() && !opt.preset.empty()) {
        throw ValidationError("give either --config or --preset, not both");
    }
    ctx.cfg = opt.config_path.empty() ? preset_config(opt.preset.empty() ? "paper-CNL" : opt.preset)
                                      : load_config(opt.config_path);
    if (opt.seed) ctx.cfg.seed = *opt.seed;
    if (opt.grid_points) {
        if (*opt.grid_points < 2) throw ValidationError("--grid-points must be at least 2");
        ctx.cfg.grid.points = *opt.grid_points;
    }
    if (!opt.harmonics.empty()) {
        for (int n : opt.harmonics) {
            if (n < 1) throw ValidationError("--harmonics entries must be positive integers");
        }
        ctx.cfg.harmonics = opt.harmonics;
    }
    if (!opt.out.empty()) ctx.cfg.output_dir = opt.out;
    ctx.out = ctx.cfg.output_dir;

    const std::string hash = config_hash(ctx.cfg);
    ctx.header = {"tool: cglp " CGLP_VERSION, "command: " + command, "config_hash: " + hash,
                  "seed: " + std::to_string(ctx.cfg.seed)};

    nlohmann::ordered_json snap;
    snap["metadata"] = ctx.header;
    const nlohmann::ordered_json body = to_json(ctx.cfg);
    for (const auto& [k, v] : body.items()) snap[k] = v;
    auto os = io::open_output(ctx.out / "config.json");
    os << snap.dump(2) << '\n';
    return ctx;
}

int report_checks(const std::vector<CheckResult>& checks) {
    int failed = 0;
    for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        failed += c.passed ? 0 : 1;
    }
    std::cout << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
    return failed;
}

void write_json(const fs::path& path, nlohmann::ordered_json j, const std::vector<std::string>& header) {
    nlohmann::ordered_json out;
    out["metadata"] = header;
    for (auto& [k, v] : j.items()) out[k] = v;
    auto os = io::open_output(path);
    os << out.dump(2) << '\n';
}

double deg(std::complex<double> z) { return std::arg(z) * 180.0 / std::numbers::pi; }

LoopTopology loop_with_kp(const ControllerSpec& spec, const RationalTF& plant, double& kp) {
    kp = resolve_kp(spec, plant);
    ControllerSpec s = spec;
    s.kp = kp;
    return build_loop(s, plant);
}

void cmd_hosidf(const Context& ctx) {
    const FrequencyGrid grid = ctx.cfg.grid.build();
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (const auto& [label, spec] : ctx.cfg.controllers) {
        double kp = 0.0;
        const LoopTopology loop = loop_with_kp(spec, ctx.cfg.plant, kp);
        std::vector<HosidfCurve> curves;
        for (int n : ctx.cfg.harmonics) curves.push_back(open_loop_curve(loop, grid, n));
        auto os = io::open_output(ctx.out / (label + "_hosidf.csv"));
        io::write_comment_header(os, ctx.header);
        os << "f_hz";
        for (int n : ctx.cfg.harmonics) os << ",abs_L" << n << ",phase_L" << n << "_deg";
        os << '\n';
        for (std::size_t i = 0; i < grid.size(); ++i) {
            os << io::fmt(rad_to_hz(grid[i]));
            for (const auto& c : curves) os << ',' << io::fmt(std::abs(c.values[i])) << ',' << io::fmt(deg(c.values[i]));
            os << '\n';
        }
        nlohmann::ordered_json entry{{"label", label}, {"kp", kp}};
        try {
            const CrossoverMargin cm = crossover_and_margin(loop);
            entry["crossover_hz"] = rad_to_hz(cm.omega_c);
            entry["phase_margin_deg"] = cm.phase_margin_deg;
        } catch (const NumericalError& e) {
            entry["crossover_error"] = e.what();
        }
        summary.push_back(entry);
    }
    write_json(ctx.out / "hosidf_summary.json", {{"controllers", summary}}, ctx.header);
}

void cmd_sensitivity(const Context& ctx) {
    const FrequencyGrid grid = ctx.cfg.grid.build();
    for (const auto& [label, spec] : ctx.cfg.controllers) {
        double kp = 0.0;
        const LoopTopology loop = loop_with_kp(spec, ctx.cfg.plant, kp);
        const ThirdOrderBreakdown b = third_order_breakdown(loop, grid);
        std::vector<HosidfCurve> extra;
        for (int n : ctx.cfg.harmonics) {
            if (n != 1 && n != 3) extra.push_back(sensitivity_curve(loop, grid, n));
        }
        auto os = io::open_output(ctx.out / (label + "_sensitivity.csv"));
        io::write_comment_header(os, ctx.header);
        os << "f_hz,abs_S1,abs_S3,abs_Sbl_3w,abs_L3";
        for (const auto& c : extra) os << ",abs_S" << c.order;
        os << '\n';
        for (std::size_t i = 0; i < grid.size(); ++i) {
            os << io::fmt(rad_to_hz(grid[i])) << ',' << io::fmt(b.s1[i]) << ',' << io::fmt(b.s3[i]) << ','
               << io::fmt(b.s_bl_3w[i]) << ',' << io::fmt(b.l3[i]);
            for (const auto& c : extra) os << ',' << io::fmt(std::abs(c.values[i]));
            os << '\n';
        }
    }
}

// Base frequency for the harmonic table: the disturbance tone, else the reference tone.
std::optional<double> tone_hz(const Scenario& sc) {
    for (const SignalDescriptor* d : {&sc.disturbance, &sc.reference}) {
        if (d->kind == SignalDescriptor::Kind::sine && d->amplitude != 0.0) return d->frequency_hz;
    }
    return std::nullopt;
}

void cmd_simulate(const Context& ctx) {
    const double sigma = resolve_noise_sigma(ctx.cfg);
    const Scenario& sc = ctx.cfg.scenario;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& [label, spec] : ctx.cfg.controllers) {
        double kp = 0.0;
        const LoopTopology loop = loop_with_kp(spec, ctx.cfg.plant, kp);
        const SimTrace tr = simulate(make_sim_config(loop, sc, sigma, ctx.cfg.seed));
        const std::size_t start = tr.tail_start(sc.analysis_fraction);
        const auto tail = std::span<const double>(tr.e).subspan(start);

        write_trace_csv(tr, ctx.out / (label + "_trace.csv"), ctx.header);
        write_events_csv(tr, ctx.out / (label + "_events.csv"), ctx.header);
        nlohmann::ordered_json entry{{"label", label},
                                     {"kp", kp},
                                     {"rms_error", rms(tail)},
                                     {"analysis_start_s", tr.t[start]},
                                     {"reset_events", tr.events()},
                                     {"event_density_warning", tr.event_density_warning}};
        try {
            const CpsdCurve c = cpsd(tail, sc.sample_rate);
            write_cpsd_csv(c, ctx.out / (label + "_cpsd.csv"), ctx.header);
            entry["cpsd_final"] = c.total();
        } catch (const InsufficientData& e) {
            entry["cpsd_error"] = e.what();
        }
        if (const auto f0 = tone_hz(sc)) {
            std::vector<HarmonicEstimate> table;
            nlohmann::ordered_json harmonics = nlohmann::ordered_json::array();
            for (int n : ctx.cfg.harmonics) {
                if (!(n * *f0 < 0.5 * sc.sample_rate)) continue;
                const HarmonicEstimate h = extract_harmonic(tail, sc.sample_rate, *f0, n, tr.t[start]);
                table.push_back(h);
                nlohmann::ordered_json row{{"n", n}, {"magnitude", h.magnitude()}, {"phase_rad", h.phase()}};
                if (n % 2 == 1) {
                    const auto s = sensitivity_hosidf(loop, hz_to_rad(*f0), n);
                    row["predicted_magnitude"] = std::abs(s);
                    row["predicted_phase_rad"] = std::arg(s);
                }
                harmonics.push_back(row);
            }
            write_harmonics_csv(table, ctx.out / (label + "_harmonics.csv"), ctx.header);
            entry["harmonic_base_hz"] = *f0;
            entry["harmonics"] = harmonics;
        }
        runs.push_back(entry);
    }
    write_json(ctx.out / "simulate_summary.json", {{"noise_sigma", sigma}, {"runs", runs}}, ctx.header);
}

void cmd_sweep(const Context& ctx) {
    const ControllerSpec* base = nullptr;
    for (const auto& c : ctx.cfg.controllers) {
        if (c.spec.variant != ControllerVariant::linear) {
            base = &c.spec;
            break;
        }
    }
    if (base == nullptr) throw ValidationError("sweep needs a cglp or filtered_cglp controller");
    SweepSettings st;
    st.grid_points = ctx.cfg.sweep.grid_points;
    st.seeds = ctx.cfg.sweep.seeds;
    st.threads = ctx.cfg.sweep.threads;
    st.base_seed = ctx.cfg.seed;
    const auto results = sweep_omega_x(*base, ctx.cfg.plant, ctx.cfg.scenario, ctx.cfg.sweep.snr_db, st);
    write_sweep_report(results, ctx.out, ctx.header);
    for (const auto& r : results) {
        std::cout << "SNR " << r.snr_target_db << " dB: argmin omega_x = "
                  << (r.argmin_hz() ? std::to_string(*r.argmin_hz()) + " Hz" : std::string("none"))
                  << (r.failures() ? " (" + std::to_string(r.failures()) + " failed points)" : "") << '\n';
    }
}

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("--config", opt.config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset, "Built-in configuration instead of --config")
        ->check(CLI::IsMember({"paper-CL", "paper-CNL"}));
    sub->add_option("--out", opt.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "Base seed (overrides scenario.seed)");
    sub->add_option("--grid-points", opt.grid_points, "Frequency grid size");
    sub->add_option("--harmonics", opt.harmonics, "Harmonic orders, e.g. --harmonics 1,3,5")->delimiter(',');
    sub->add_flag("--validate", opt.validate, "Run the invariant suite first; stop on failure");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reset control loop analysis: describing functions, simulation, noise sweeps"};
    app.set_version_flag("--version", "cglp " CGLP_VERSION);
    app.require_subcommand(1);
    Options opt;
    struct Command {
        const char* name;
        const char* help;
        void (*run)(const Context&);
    };
    const Command commands[] = {
        {"hosidf", "Open-loop describing functions L_n over the grid", cmd_hosidf},
        {"sensitivity", "S_1, S_3 and the components of S_3 over the grid", cmd_sensitivity},
        {"simulate", "Closed-loop time simulation: trace, CPSD, harmonic table", cmd_simulate},
        {"sweep", "RMS error against the lead split frequency at each SNR", cmd_sweep},
        {"validate", "Run the invariant suite on the configured loops", nullptr},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        subs.push_back(app.add_subcommand(c.name, c.help));
        add_common(subs.back(), opt);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const Context ctx = prepare(opt, commands[i].name);
            std::cerr << "cglp " << commands[i].name << ": kernels=" << kernels::active().name
                      << " config_hash=" << config_hash(ctx.cfg) << " out=" << ctx.out.string() << '\n';
            if (commands[i].run == nullptr || opt.validate) {
                const int failed = report_checks(run_invariant_suite(ctx.cfg));
                if (failed > 0) return 1;
                if (commands[i].run == nullptr) return 0;
            }
            commands[i].run(ctx);
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const InsufficientData& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
