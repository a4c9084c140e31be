#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "cglp/config.hpp"
#include "cglp/error.hpp"

using namespace cglp;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("presets") {
    const ExperimentConfig cl = preset_config("paper-CL");
    REQUIRE(cl.controllers.size() == 1);
    CHECK(cl.controllers[0].label == "C_L");
    CHECK(cl.controllers[0].spec.variant == ControllerVariant::linear);
    CHECK(cl.controllers[0].spec.omega_i_hz == 15.0);

    const ExperimentConfig cnl = parse_config(R"({"preset": "paper-CNL"})");
    CHECK(cnl.controllers[0].label == "C_NL");
    CHECK(cnl.controllers[0].spec.gamma == 0.2);
    CHECK(cnl.controllers[0].spec.omega_x_hz == 150.0);
    CHECK(cnl.scenario.sample_rate == 1e5);
    CHECK(cnl.scenario.duration == 4.0);
    CHECK(cnl.harmonics == std::vector<int>{1, 3});
    CHECK(config_hash(cnl) == config_hash(preset_config("paper-CNL")));
    CHECK(config_hash(cnl) != config_hash(cl));

    CHECK(contains(error_of(R"({"preset": "paper-X"})"), "unknown preset"));
    CHECK(contains(error_of("{}"), "no controllers"));
}

TEST_CASE("errors carry line numbers") {
    const std::string unknown = "{\n  \"preset\": \"paper-CNL\",\n  \"scenario\": {\n    \"duraton_s\": 1\n  }\n}\n";
    const std::string msg = error_of(unknown);
    CHECK(contains(msg, "cfg.json:4:"));
    CHECK(contains(msg, "unknown key 'duraton_s'"));

    const std::string nested =
        "{\n \"controllers\": [\n  {\"preset\": \"paper-CL\"},\n  {\"preset\": \"paper-CNL\",\n   \"gamma\": \"x\"}\n ]\n}";
    CHECK(contains(error_of(nested), "cfg.json:5:"));
    CHECK(contains(error_of(nested), "/controllers/1/gamma"));

    const std::string bad_value = "{\"preset\": \"paper-CNL\",\n\"controllers\": [{\n\"omega_x_hz\": 50}]}";
    CHECK(contains(error_of(bad_value), "cfg.json:2:"));
    CHECK(contains(error_of(bad_value), "omega_x_hz must lie in"));

    const std::string malformed = "{\n  \"preset\": \"paper-CNL\",\n  \"seed\" 3\n}";
    CHECK(contains(error_of(malformed), "cfg.json:3:"));
    CHECK(contains(error_of(malformed), "malformed JSON"));

    const std::string dup = R"({"controllers": [{"label": "a"}, {"label": "a", "gamma": 0.5}]})";
    CHECK(contains(error_of(dup), "duplicate controller label"));

    const std::string both = R"({"preset": "paper-CNL", "scenario": {"noise_sigma": 1e-4, "snr_db": 40}})";
    CHECK(contains(error_of(both), "either noise_sigma or snr_db"));

    CHECK(contains(error_of(R"({"preset": "paper-CNL", "analysis": {"sweep": {"grid_points": 3}}})"), ">= 5"));
    CHECK(contains(error_of(R"({"preset": "paper-CNL", "scenario": {"seed": -1}})"), "nonnegative integer"));
}

TEST_CASE("full document and round trip") {
    const std::string text = R"({
  "metadata": {"tool": "anything", "seed": 9},
  "plant": {"numerator": [1000], "denominator": [100, 20, 1], "delay_s": 1e-4},
  "controllers": [
    {"label": "lin", "variant": "linear", "omega_i_hz": 15},
    {"label": "split", "variant": "filtered_cglp", "omega_x_hz": 360, "omega_alpha_hz": null,
     "notch": {"omega_n_hz": 60, "q1": 1, "q2": 0.5}}
  ],
  "scenario": {
    "sample_rate_hz": 50000, "duration_s": 2, "analysis_fraction": 0.25,
    "reference": {"kind": "sum", "terms": [{"kind": "sine", "amplitude": 1, "frequency_hz": 5}, {"kind": "zero"}]},
    "disturbance": {"kind": "sine", "amplitude": 0.25, "frequency_hz": 40, "phase_rad": 0.5},
    "snr_db": 30, "seed": 12
  },
  "analysis": {"grid": {"f_min_hz": 10, "f_max_hz": 1000, "points": 20}, "harmonics": [1, 3, 5],
               "sweep": {"snr_db": [47.1, 30], "grid_points": 7, "seeds": 2, "threads": 1}},
  "output_dir": "results"
})";
    const ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.plant.delay() == 1e-4);
    CHECK(cfg.plant.denominator() == std::vector<double>{100, 20, 1});
    REQUIRE(cfg.controllers.size() == 2);
    CHECK(cfg.controllers[1].spec.variant == ControllerVariant::filtered_cglp);
    CHECK_FALSE(cfg.controllers[1].spec.omega_alpha_hz.has_value());
    CHECK(cfg.controllers[1].spec.notch.q2 == 0.5);
    CHECK(cfg.scenario.reference.terms.size() == 2);
    CHECK(cfg.scenario.disturbance.phase == 0.5);
    CHECK(cfg.snr_db == 30.0);
    CHECK_FALSE(cfg.noise_sigma.has_value());
    CHECK(cfg.seed == 12);
    CHECK(cfg.grid.points == 20);
    CHECK(cfg.harmonics == std::vector<int>{1, 3, 5});
    CHECK(cfg.sweep.snr_db == std::vector<double>{47.1, 30.0});
    CHECK(cfg.output_dir == "results");

    const ExperimentConfig back = parse_config(to_json(cfg).dump(2));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(to_json(back) == to_json(cfg));

    // Output location does not enter the hash.
    ExperimentConfig moved = cfg;
    moved.output_dir = "elsewhere";
    CHECK(config_hash(moved) == config_hash(cfg));
    moved.seed = 13;
    CHECK(config_hash(moved) != config_hash(cfg));

    // SNR is defined on the first reset controller with omega_x = omega_r.
    const ControllerSpec ref = snr_reference_spec(cfg);
    CHECK(ref.variant == ControllerVariant::cglp);
    CHECK(ref.omega_x_hz == ref.omega_r_hz);
}

TEST_CASE("noise resolution") {
    ExperimentConfig cfg = preset_config("paper-CNL");
    CHECK(resolve_noise_sigma(cfg) == 0.0);
    cfg.noise_sigma = 2e-3;
    CHECK(resolve_noise_sigma(cfg) == 2e-3);
    cfg.noise_sigma.reset();
    cfg.snr_db = 20.0;
    cfg.scenario.duration = 0.4;
    const double s = resolve_noise_sigma(cfg);
    CHECK(snr_of(build_loop(snr_reference_spec(cfg)), s, cfg.scenario) == doctest::Approx(20.0));
}

TEST_CASE("load from file") {
    const auto path = std::filesystem::temp_directory_path() / "cglp_test_config.json";
    {
        std::ofstream(path) << "{\n\"preset\": \"paper-CL\",\n\"bogus\": 1\n}\n";
    }
    try {
        load_config(path);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(contains(e.what(), path.string() + ":3:"));
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path), ValidationError);
}
