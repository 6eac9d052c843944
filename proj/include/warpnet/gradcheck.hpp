#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace warpnet {

struct GradCheckResult {
  std::string op;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central-finite-difference verification of every differentiable op,
// >= 50 seeded random cases each, threshold 1e-4 (kink positions excluded).
// `corrupt_op`, when non-empty, perturbs that op's analytic gradient so the
// failure path can be exercised.
std::vector<GradCheckResult> run_gradient_checks(
    std::uint64_t seed, const std::string& corrupt_op = "");

}  // namespace warpnet
