#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cglp/error.hpp"
#include "cglp/hybrid_sim.hpp"
#include "cglp/spectral.hpp"
#include "cglp/tuning.hpp"

using namespace cglp;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

LoopTopology paper_cnl() { return build_loop(ControllerSpec::paper_cglp(360.0), paper_plant()); }

// Same block structure with the reset element replaced by its base-linear
// transfer function: the pure-LTI reference for the gamma = 1 limit.
std::vector<double> lti_reference_error(const SimConfig& cfg) {
    const double fs = cfg.sample_rate;
    DiscreteBlock pre = discretize(cfg.loop.pre_reset, fs);
    DiscreteBlock r = discretize(base_linear_tf(cfg.loop.reset), fs);
    DiscreteBlock post = discretize(cfg.loop.post_reset, fs);
    DiscreteBlock plant = discretize(cfg.loop.plant, fs);
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration * fs));
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) / fs;
    const auto ref = generate_signal(cfg.reference, t, mix_seed(cfg.seed, 1));
    const auto d = generate_signal(cfg.disturbance, t, mix_seed(cfg.seed, 2));
    const auto noise = generate_signal(cfg.noise, t, mix_seed(cfg.seed, 3));
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double y = plant.output(0.0);
        e[k] = ref[k] - (y + noise[k]);
        const double er = pre.output(e[k]);
        const double ur = r.output(er);
        const double u = post.output(ur);
        pre.advance(e[k]);
        r.advance(er);
        post.advance(ur);
        plant.advance(u + d[k]);
    }
    return e;
}

}  // namespace

TEST_CASE("signals") {
    std::vector<double> t{0.0, 1.0 / 160.0, 0.5};
    CHECK(generate_signal(SignalDescriptor::zero(), t, 1) == std::vector<double>(3, 0.0));
    CHECK(generate_signal(SignalDescriptor::sine(0.25, 40.0), t, 1)[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(SignalDescriptor::sine(1.0, 0.0), InvalidParameter);
    CHECK_THROWS_AS(SignalDescriptor::sine(INFINITY, 1.0), InvalidParameter);
    CHECK_THROWS_AS(SignalDescriptor::gaussian_white(-1.0), InvalidParameter);

    std::vector<double> tt(1'000'000);
    for (std::size_t k = 0; k < tt.size(); ++k) tt[k] = static_cast<double>(k) * 1e-5;
    const auto g = generate_signal(SignalDescriptor::gaussian_white(0.3), tt, 11);
    CHECK(variance(g) == doctest::Approx(0.09).epsilon(0.01));
    CHECK(g == generate_signal(SignalDescriptor::gaussian_white(0.3), tt, 11));
    CHECK(g != generate_signal(SignalDescriptor::gaussian_white(0.3), tt, 12));

    const auto sum = SignalDescriptor::sum({SignalDescriptor::sine(1.0, 10.0), SignalDescriptor::sine(2.0, 10.0)});
    CHECK(generate_signal(sum, t, 0)[1] == doctest::Approx(3.0 * std::sin(2 * kPi * 10.0 / 160.0)));
    CHECK(SignalDescriptor::sum({SignalDescriptor::zero(), SignalDescriptor::sine(0.0, 3.0)}).is_zero());
}

TEST_CASE("discretization") {
    const DiscreteBlock unity = discretize(RationalTF::unity(), 1e5);
    CHECK(unity.states() == 0);
    CHECK(unity.output(0.7) == 0.7);

    const double wa = hz_to_rad(114.5), fs = 1e5;
    const DiscreteBlock lag = discretize(RationalTF({1.0}, {1.0, 1.0 / wa}), fs);
    REQUIRE(lag.states() == 1);
    CHECK(lag.Ad()(0, 0) == doctest::Approx(std::exp(-wa / fs)).epsilon(1e-14));
    CHECK(lag.dc_gain() == doctest::Approx(1.0).epsilon(1e-12));

    const DiscreteBlock plant = discretize(paper_plant(), fs);
    CHECK(plant.delay_samples() == 27);
    CHECK(plant.delay_fraction() == 0.0);
    CHECK(plant.dc_gain() == doctest::Approx(9836.0 / 7376.0).epsilon(1e-10));
    CHECK_FALSE(plant.direct_feedthrough());

    const auto lead = make_lead(hz_to_rad(150.0), hz_to_rad(3000.0));
    CHECK(discretize(lead, fs).dc_gain() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("delay line") {
    // Pure delay of 2.5 samples: integer buffer plus linear interpolation.
    DiscreteBlock d(StateSpace{Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::RowVectorXd(0), 1.0}, 2.5, 1.0);
    CHECK(d.delay_samples() == 2);
    CHECK(d.delay_fraction() == doctest::Approx(0.5));
    std::vector<double> out;
    for (int k = 0; k < 6; ++k) {
        const double u = static_cast<double>(k);
        out.push_back(d.output(u));
        d.advance(u);
    }
    CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 0.5, 1.5, 2.5});
}

TEST_CASE("zero inputs stay at rest") {
    SimConfig cfg{paper_cnl()};
    cfg.duration = 0.05;
    const SimTrace tr = simulate(cfg);
    CHECK(tr.events() == 0);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        REQUIRE(tr.e[k] == 0.0);
        REQUIRE(tr.y[k] == 0.0);
        REQUIRE(tr.u[k] == 0.0);
    }
}

TEST_CASE("reset element stepping") {
    const ResetElement r = make_gfore(100.0, 0.0);
    ResetStepper s(r, 1e4);
    CHECK_FALSE(s.apply_reset(1.0));  // first sample never resets on sign
    s.advance(1.0);
    s.advance(1.0);
    const double before = s.state()[0];
    CHECK(before > 0.0);
    CHECK(s.apply_reset(-1.0));
    CHECK(s.pre_jump_state()[0] == before);
    CHECK(s.state()[0] == 0.0);
    // Zero state: a further crossing changes nothing and is not reported.
    s.advance(-1.0);
    s.clear();
    CHECK_FALSE(s.apply_reset(0.0));
}

TEST_CASE("linear limit matches a pure-LTI simulation") {
    ControllerSpec spec = ControllerSpec::paper_cglp(360.0);
    spec.gamma = 1.0;
    spec.omega_alpha_hz.reset();
    SimConfig cfg{build_loop(spec, paper_plant())};
    cfg.duration = 0.5;
    cfg.disturbance = SignalDescriptor::sine(0.25, 40.0);
    cfg.noise = SignalDescriptor::gaussian_white(1e-4);
    cfg.seed = 4;
    const SimTrace tr = simulate(cfg);
    const auto ref = lti_reference_error(cfg);
    double scale = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        scale = std::max(scale, std::abs(ref[k]));
        worst = std::max(worst, std::abs(tr.e[k] - ref[k]));
    }
    CHECK(worst <= 1e-9 * scale);
    // Events may be detected but the jump is the identity and none are recorded.
    CHECK(tr.events() == 0);
}

TEST_CASE("gamma = 1 tracks the base-linear closed-loop response") {
    ControllerSpec spec = ControllerSpec::paper_linear();
    const LoopTopology loop = build_loop(spec, paper_plant());
    SimConfig cfg{loop};
    cfg.reference = SignalDescriptor::sine(1.0, 10.0);
    cfg.duration = 4.0;  // 40 periods
    const SimTrace tr = simulate(cfg);
    const std::size_t start = tr.tail_start(0.25);
    const auto est = extract_harmonic(std::span<const double>(tr.y).subspan(start), cfg.sample_rate, 10.0, 1, tr.t[start]);
    const cplx l = loop.base_linear_open_loop().eval(hz_to_rad(10.0));
    const cplx t = l / (1.0 + l);
    CHECK(std::abs(est.amplitude - t) / std::abs(t) < 0.01);
}

TEST_CASE("determinism, jump correctness and boundedness") {
    SimConfig cfg{paper_cnl()};
    cfg.duration = 1.0;
    cfg.disturbance = SignalDescriptor::sine(0.25, 40.0);
    cfg.noise = SignalDescriptor::gaussian_white(1e-4);
    cfg.seed = 99;
    const SimTrace a = simulate(cfg);
    const SimTrace b = simulate(cfg);
    CHECK(a.e == b.e);
    CHECK(a.u_r == b.u_r);
    CHECK(a.y == b.y);
    CHECK(a.event_times == b.event_times);
    CHECK(a.event_pre == b.event_pre);
    REQUIRE(a.events() > 10);
    const double g = cfg.loop.reset.reset_values()(0);
    for (std::size_t k = 0; k < a.events(); ++k) {
        REQUIRE(a.event_post[k] == g * a.event_pre[k]);
        if (k > 0) REQUIRE(a.event_times[k] > a.event_times[k - 1]);
    }
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(std::isfinite(a.u[k]));
    CHECK_FALSE(a.event_density_warning);

    cfg.seed = 100;
    CHECK(simulate(cfg).e != a.e);
}

TEST_CASE("noise-driven chattering raises the density warning") {
    SimConfig cfg{build_loop(ControllerSpec::paper_cglp(150.0), paper_plant())};
    cfg.duration = 0.2;
    cfg.noise = SignalDescriptor::gaussian_white(1.0);
    CHECK(simulate(cfg).event_density_warning);
}

TEST_CASE("divergence and algebraic loops are reported") {
    ControllerSpec spec = ControllerSpec::paper_linear();
    spec.kp = 1e4;
    SimConfig cfg{build_loop(spec, paper_plant())};
    cfg.reference = SignalDescriptor::sine(1.0, 10.0);
    cfg.duration = 4.0;
    try {
        simulate(cfg);
        FAIL("expected divergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("divergence at t =") != std::string::npos);
    }

    SimConfig alg{paper_cnl()};
    alg.loop.plant = RationalTF({1.0, 0.1}, {1.0, 0.01});
    CHECK_THROWS_AS(simulate(alg), InvalidParameter);

    SimConfig bad{paper_cnl()};
    bad.sample_rate = 0.0;
    CHECK_THROWS_AS(simulate(bad), InvalidParameter);
}

TEST_CASE("csv export") {
    SimConfig cfg{paper_cnl()};
    cfg.duration = 0.01;
    cfg.reference = SignalDescriptor::sine(1.0, 100.0);
    const SimTrace tr = simulate(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "cglp_test_hybrid";
    write_trace_csv(tr, dir / "trace.csv", {"tool: test"});
    write_events_csv(tr, dir / "events.csv");
    std::ifstream in(dir / "trace.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "# tool: test");
    std::getline(in, line);
    CHECK(line == "t,e,e_r,u_r,u,y");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == tr.size());
    std::ifstream ev(dir / "events.csv");
    std::getline(ev, line);
    CHECK(line == "t_event,pre_0,post_0");
    std::filesystem::remove_all(dir);
}
