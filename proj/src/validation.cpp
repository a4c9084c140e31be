#include "cglp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cglp/error.hpp"

namespace cglp {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

template <class F>
CheckResult check(const std::string& name, F body) {
    CheckResult r{name, false, {}};
    try {
        r.detail = body(r.passed);
    } catch (const Error& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    return r;
}

// Every tenth point of the analysis grid keeps the suite fast.
std::vector<double> coarse(const FrequencyGrid& g) {
    std::vector<double> w;
    for (std::size_t i = 0; i < g.size(); i += std::max<std::size_t>(1, g.size() / 50)) w.push_back(g[i]);
    return w;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& cfg) {
    std::vector<CheckResult> out;
    const FrequencyGrid grid = cfg.grid.build();
    const std::vector<double> w = coarse(grid);

    for (const auto& [label, spec] : cfg.controllers) {
        const std::string tag = " [" + label + "]";
        std::optional<LoopTopology> loop;
        out.push_back(check("loop builds with Hurwitz reset element" + tag, [&](bool& ok) {
            loop = build_loop(spec, cfg.plant);
            ok = loop->reset.hurwitz();
            return "k_p = " + num(resolve_kp(spec, cfg.plant));
        }));
        if (!loop) continue;

        out.push_back(check("even harmonics vanish" + tag, [&](bool& ok) {
            ok = true;
            for (double x : w) {
                for (int n : {2, 4, 6}) {
                    ok = ok && hosidf(loop->reset, x, n).value == std::complex<double>(0.0, 0.0) &&
                         open_loop_hosidf(*loop, x, n) == std::complex<double>(0.0, 0.0);
                }
            }
            return std::to_string(w.size()) + " frequencies, n = 2, 4, 6";
        }));

        out.push_back(check("reset values of one give the base-linear response" + tag, [&](bool& ok) {
            const ResetElement& r = loop->reset;
            const ResetElement lin(r.A(), r.B(), r.C(), r.D(), Eigen::VectorXd::Ones(r.states()));
            const RationalTF bl = base_linear_tf(lin);
            double worst = 0.0;
            for (double x : w) {
                worst = std::max(worst, theta_d(lin, x).cwiseAbs().maxCoeff());
                worst = std::max(worst, std::abs(hosidf(lin, x, 1).value - bl.eval(x)) / std::abs(bl.eval(x)));
            }
            ok = worst <= 1e-12;
            return "max deviation " + num(worst);
        }));

        out.push_back(check("single gain crossover" + tag, [&](bool& ok) {
            const CrossoverMargin cm = crossover_and_margin(*loop);
            ok = true;
            return "crossover " + num(rad_to_hz(cm.omega_c)) + " Hz, phase margin " + num(cm.phase_margin_deg) +
                   " deg";
        }));

        if (spec.variant != ControllerVariant::linear) {
            out.push_back(check("first-order sensitivity independent of split and notch" + tag, [&](bool& ok) {
                ControllerSpec plain = spec;
                plain.variant = ControllerVariant::cglp;
                plain.omega_x_hz = plain.omega_r_hz;
                plain.kp = resolve_kp(spec, cfg.plant);
                ControllerSpec same = spec;
                same.kp = plain.kp;
                const HosidfCurve a = sensitivity_curve(build_loop(plain, cfg.plant), grid, 1);
                const HosidfCurve b = sensitivity_curve(build_loop(same, cfg.plant), grid, 1);
                double worst = 0.0;
                for (std::size_t i = 0; i < a.values.size(); ++i) {
                    worst = std::max(worst, std::abs(std::abs(a.values[i]) - std::abs(b.values[i])) /
                                                std::abs(a.values[i]));
                }
                ok = worst <= 1e-8;
                return "max relative deviation " + num(worst);
            }));
        }

        out.push_back(check("simulation is deterministic and jumps are exact" + tag, [&](bool& ok) {
            Scenario sc = cfg.scenario;
            sc.duration = std::min(sc.duration, 0.5);
            const double sigma = cfg.noise_sigma.value_or(0.0);
            const SimConfig sim = make_sim_config(*loop, sc, sigma, cfg.seed);
            const SimTrace a = simulate(sim);
            const SimTrace b = simulate(sim);
            const bool same = a.e == b.e && a.y == b.y && a.u == b.u && a.event_times == b.event_times;
            const auto rho = loop->reset.reset_values();
            const auto n = static_cast<std::size_t>(loop->reset.states());
            bool exact = true;
            for (std::size_t k = 0; k < a.events(); ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    exact = exact && a.event_post[k * n + i] == rho[static_cast<Eigen::Index>(i)] * a.event_pre[k * n + i];
                }
            }
            const bool increasing = std::adjacent_find(a.event_times.begin(), a.event_times.end(),
                                                       [](double x, double y) { return y <= x; }) ==
                                    a.event_times.end();
            ok = same && exact && increasing;
            return std::to_string(a.events()) + " reset events in " + num(sc.duration) + " s";
        }));

        out.push_back(check("error CPSD is nondecreasing" + tag, [&](bool& ok) {
            Scenario sc = cfg.scenario;
            sc.duration = std::min(sc.duration, 0.5);
            const SimTrace tr = simulate(make_sim_config(*loop, sc, cfg.noise_sigma.value_or(0.0), cfg.seed));
            const std::size_t seg = std::min<std::size_t>(std::size_t{1} << 14, tr.size() / 3 * 2);
            const CpsdCurve c = cpsd(tr.e, sc.sample_rate, {seg - seg % 2});
            ok = std::is_sorted(c.cumulative.begin(), c.cumulative.end());
            return "final value " + num(c.total());
        }));
    }
    return out;
}

}  // namespace cglp
