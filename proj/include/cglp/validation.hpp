#pragma once

// Structural checks run against the objects a configuration describes.

#include <string>
#include <vector>

#include "cglp/config.hpp"

namespace cglp {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Even-harmonic nullity, linear limit, crossover uniqueness, first-order
/// invariance, simulator determinism and jump correctness, CPSD monotonicity.
std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& cfg);

}  // namespace cglp
