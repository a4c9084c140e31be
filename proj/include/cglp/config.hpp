#pragma once

// Experiment configuration: a JSON document, validated against a fixed schema.
// Unknown keys are rejected and every error names the line it came from.
// A top-level "metadata" member is accepted and ignored.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cglp/tuning.hpp"

namespace cglp {

struct GridConfig {
    double f_min_hz = 1.0;
    double f_max_hz = 1e4;
    std::size_t points = 1000;

    FrequencyGrid build() const { return FrequencyGrid::log_spaced_hz(f_min_hz, f_max_hz, points); }
};

struct SweepConfig {
    std::vector<double> snr_db{47.1};
    std::size_t grid_points = 25;
    std::size_t seeds = 5;
    unsigned threads = 0;
};

struct ExperimentConfig {
    std::optional<std::string> preset;  // "paper-CL" or "paper-CNL"
    RationalTF plant = paper_plant();
    std::vector<LabeledSpec> controllers;
    Scenario scenario;
    std::optional<double> noise_sigma;
    std::optional<double> snr_db;
    std::uint64_t seed = 1;
    GridConfig grid;
    std::vector<int> harmonics{1, 3};
    SweepConfig sweep;
    std::string output_dir = "out";
};

/// Parses and validates. origin prefixes error messages ("file:line: ...").
/// Throws ValidationError.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// The built-in presets as complete configs.
ExperimentConfig preset_config(const std::string& name);

/// Fully expanded form; parsing it back yields an equal configuration.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// FNV-1a (64 bit, hex) of the canonical JSON dump without output_dir.
std::string config_hash(const ExperimentConfig& cfg);

/// Noise level for the time-domain runs: noise_sigma if given, else solved from
/// snr_db on the reference loop, else zero.
double resolve_noise_sigma(const ExperimentConfig& cfg);

/// First reset controller with omega_x moved to omega_r, or the first
/// controller when all are linear. The SNR is defined on this loop.
ControllerSpec snr_reference_spec(const ExperimentConfig& cfg);

}  // namespace cglp
