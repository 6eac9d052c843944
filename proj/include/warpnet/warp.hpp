#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "warpnet/rng.hpp"

namespace warpnet {

// Discretized order-preserving warping function on the grid 0..T-1.
// Valid warps satisfy values[0] = 0, values[T-1] = T-1, monotone
// non-decreasing, all entries in [0, T-1].
struct WarpFunction {
  std::vector<double> values;

  std::size_t length() const { return values.size(); }
};

// Discrete derivative of a warp: non-negative, (1/T) * sum = 1.
struct WarpDerivative {
  std::vector<double> density;

  std::size_t length() const { return density.size(); }
};

struct WarpViolation {
  enum class Kind { Endpoint, Monotonicity, Range };
  Kind kind;
  std::size_t index;  // first offending index
  std::string message;
};

struct ValidityReport {
  std::vector<WarpViolation> violations;
  bool valid() const { return violations.empty(); }
};

WarpFunction identity_warp(std::size_t t);
ValidityReport validate(const WarpFunction& w, double tol = 1e-9);
WarpDerivative derivative_of(const WarpFunction& w);
WarpFunction warp_from_derivative(const WarpDerivative& d);
WarpFunction compose(const WarpFunction& g1, const WarpFunction& g2);
WarpFunction invert(const WarpFunction& w);
WarpFunction mean_warp(const std::vector<WarpFunction>& warps);
WarpFunction random_warp(std::size_t t, double roughness, Rng& rng);
WarpFunction affine_warp(double a, double b, std::size_t t);

// Linear interpolation of a warp's values at a real grid position,
// clamped to [0, T-1].
double interp_at(const std::vector<double>& values, double pos);

}  // namespace warpnet
