#include "warpnet/warp.hpp"

#include <algorithm>
#include <cmath>

#include "warpnet/errors.hpp"

namespace warpnet {

namespace {

void require_valid(const WarpFunction& w, const char* op) {
  ValidityReport r = validate(w);
  if (!r.valid())
    throw DomainError(std::string(op) + ": invalid warp (" +
                      r.violations.front().message + ")");
}

}  // namespace

double interp_at(const std::vector<double>& values, double pos) {
  const std::size_t t = values.size();
  if (pos <= 0.0) return values.front();
  if (pos >= static_cast<double>(t - 1)) return values.back();
  std::size_t k = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(k);
  if (frac == 0.0) return values[k];
  return values[k] * (1.0 - frac) + values[k + 1] * frac;
}

WarpFunction identity_warp(std::size_t t) {
  if (t < 2) throw DomainError("identity_warp: length must be >= 2");
  WarpFunction w;
  w.values.resize(t);
  for (std::size_t i = 0; i < t; ++i) w.values[i] = static_cast<double>(i);
  return w;
}

ValidityReport validate(const WarpFunction& w, double tol) {
  ValidityReport report;
  const std::size_t t = w.length();
  if (t < 2) {
    report.violations.push_back(
        {WarpViolation::Kind::Range, 0, "length must be >= 2"});
    return report;
  }
  const double last = static_cast<double>(t - 1);
  if (std::abs(w.values[0]) > tol)
    report.violations.push_back({WarpViolation::Kind::Endpoint, 0,
                                 "endpoint violation at index 0"});
  if (std::abs(w.values[t - 1] - last) > tol)
    report.violations.push_back({WarpViolation::Kind::Endpoint, t - 1,
                                 "endpoint violation at last index"});
  for (std::size_t i = 0; i + 1 < t; ++i) {
    if (w.values[i + 1] < w.values[i]) {
      report.violations.push_back(
          {WarpViolation::Kind::Monotonicity, i + 1,
           "monotonicity violation at index " + std::to_string(i + 1)});
      break;
    }
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (w.values[i] < -tol || w.values[i] > last + tol) {
      report.violations.push_back(
          {WarpViolation::Kind::Range, i,
           "range violation at index " + std::to_string(i)});
      break;
    }
  }
  return report;
}

WarpDerivative derivative_of(const WarpFunction& w) {
  require_valid(w, "derivative_of");
  const std::size_t t = w.length();
  WarpDerivative d;
  d.density.resize(t, 0.0);
  // Forward differences; d[0] is the leading zero step. The span is exactly
  // T-1 for a valid warp, so scaling by T/(T-1) gives (1/T) * sum = 1.
  const double scale =
      static_cast<double>(t) / static_cast<double>(t - 1);
  for (std::size_t i = 1; i < t; ++i)
    d.density[i] = (w.values[i] - w.values[i - 1]) * scale;
  return d;
}

WarpFunction warp_from_derivative(const WarpDerivative& d) {
  const std::size_t t = d.length();
  if (t < 2) throw DomainError("warp_from_derivative: length must be >= 2");
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    if (d.density[i] < 0.0)
      throw DomainError("warp_from_derivative: negative density at index " +
                        std::to_string(i));
    total += d.density[i];
  }
  if (total <= 0.0)
    throw DomainError("warp_from_derivative: degenerate all-zero density");
  WarpFunction w;
  w.values.resize(t);
  const double scale = static_cast<double>(t - 1) / total;
  double cum = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    cum += d.density[i];
    w.values[i] = cum * scale;
  }
  // Pin endpoints exactly against accumulated round-off.
  if (d.density[0] == 0.0) w.values.front() = 0.0;
  w.values.back() = static_cast<double>(t - 1);
  return w;
}

WarpFunction compose(const WarpFunction& g1, const WarpFunction& g2) {
  if (g1.length() != g2.length())
    throw ShapeError("compose: length mismatch");
  require_valid(g1, "compose");
  require_valid(g2, "compose");
  WarpFunction out;
  out.values.resize(g1.length());
  for (std::size_t i = 0; i < g2.length(); ++i)
    out.values[i] = interp_at(g1.values, g2.values[i]);
  return out;
}

WarpFunction invert(const WarpFunction& w) {
  require_valid(w, "invert");
  const std::size_t t = w.length();
  WarpFunction out;
  out.values.resize(t);
  // Generalized inverse: smallest interpolated position s with w(s) >= target;
  // the first crossing index yields the left edge of any flat segment.
  std::size_t k = 0;
  for (std::size_t target = 0; target < t; ++target) {
    const double y = static_cast<double>(target);
    while (w.values[k] < y) ++k;
    if (k == 0) {
      out.values[target] = 0.0;
    } else {
      const double lo = w.values[k - 1];
      const double hi = w.values[k];
      out.values[target] =
          static_cast<double>(k - 1) + (y - lo) / (hi - lo);
    }
  }
  out.values[0] = 0.0;
  out.values[t - 1] = static_cast<double>(t - 1);
  return out;
}

WarpFunction mean_warp(const std::vector<WarpFunction>& warps) {
  if (warps.empty()) throw DomainError("mean_warp: empty input");
  const std::size_t t = warps.front().length();
  for (const auto& w : warps) {
    if (w.length() != t) throw ShapeError("mean_warp: length mismatch");
    require_valid(w, "mean_warp");
  }
  WarpFunction out;
  out.values.assign(t, 0.0);
  for (const auto& w : warps)
    for (std::size_t i = 0; i < t; ++i) out.values[i] += w.values[i];
  const double inv_n = 1.0 / static_cast<double>(warps.size());
  for (double& v : out.values) v *= inv_n;
  out.values[0] = 0.0;
  out.values[t - 1] = static_cast<double>(t - 1);
  return out;
}

WarpFunction random_warp(std::size_t t, double roughness, Rng& rng) {
  if (t < 2) throw DomainError("random_warp: length must be >= 2");
  if (roughness <= 0.0) throw DomainError("random_warp: roughness must be > 0");
  WarpDerivative d;
  d.density.resize(t, 0.0);
  const double shape = 1.0 / roughness;
  for (std::size_t i = 1; i < t; ++i) {
    double g = rng.gamma(shape);
    d.density[i] = std::max(g, 1e-300);
  }
  return warp_from_derivative(d);
}

WarpFunction affine_warp(double a, double b, std::size_t t) {
  if (t < 2) throw DomainError("affine_warp: length must be >= 2");
  if (a <= 0.0) throw DomainError("affine_warp: slope must be > 0");
  WarpFunction w;
  w.values.resize(t);
  const double last = static_cast<double>(t - 1);
  for (std::size_t i = 0; i < t; ++i)
    w.values[i] = std::clamp(a * static_cast<double>(i) + b, 0.0, last);
  w.values[0] = 0.0;
  w.values[t - 1] = last;
  // Pinning the endpoints can break monotonicity when b shifts the whole
  // ramp past an edge; re-sort is not needed, a single sweep restores it.
  for (std::size_t i = 1; i < t; ++i)
    w.values[i] = std::max(w.values[i], w.values[i - 1]);
  for (std::size_t i = t - 1; i > 0; --i)
    w.values[i - 1] = std::min(w.values[i - 1], w.values[i]);
  return w;
}

}  // namespace warpnet
