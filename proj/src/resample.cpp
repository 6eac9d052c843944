#include "warpnet/resample.hpp"

#include <algorithm>
#include <cmath>

#include "warpnet/errors.hpp"

namespace warpnet {

namespace {

constexpr double kSnapTol = 1e-9;

double clamp_pos(double pos, std::size_t t) {
  double p = std::clamp(pos, 0.0, static_cast<double>(t - 1));
  double r = std::round(p);
  return std::abs(p - r) < kSnapTol ? r : p;
}

void check_pair(const Sequence& x, const WarpFunction& w, const char* op) {
  if (x.length() < 2 || x.channels() < 1)
    throw ShapeError(std::string(op) + ": sequence must be T>=2, N>=1");
  if (x.length() != w.length())
    throw ShapeError(std::string(op) + ": sequence/warp length mismatch");
  ValidityReport r = validate(w);
  if (!r.valid())
    throw DomainError(std::string(op) + ": invalid warp (" +
                      r.violations.front().message + ")");
}

}  // namespace

Sequence make_sequence(std::size_t t, std::size_t n, std::optional<int> label) {
  Sequence s;
  s.frames = RealArray({t, n});
  s.label = label;
  return s;
}

Sequence warp_sequence(const Sequence& x, const WarpFunction& w) {
  check_pair(x, w, "warp_sequence");
  const std::size_t t = x.length();
  const std::size_t n = x.channels();
  Sequence y;
  y.frames = RealArray({t, n});
  y.label = x.label;
  for (std::size_t i = 0; i < t; ++i) {
    const double pos = clamp_pos(w.values[i], t);
    const std::size_t k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    if (frac == 0.0) {
      for (std::size_t j = 0; j < n; ++j) y.frames.at(i, j) = x.frames.at(k, j);
    } else {
      for (std::size_t j = 0; j < n; ++j)
        y.frames.at(i, j) = x.frames.at(k, j) * (1.0 - frac) +
                            x.frames.at(k + 1, j) * frac;
    }
  }
  return y;
}

double grad_wrt_input(const WarpFunction& w, std::size_t i, std::size_t tau) {
  if (i >= w.length() || tau >= w.length())
    throw DomainError("grad_wrt_input: index out of range");
  return std::max(0.0, 1.0 - std::abs(w.values[i] - static_cast<double>(tau)));
}

double grad_wrt_warp(const Sequence& x, const WarpFunction& w, std::size_t i,
                     std::size_t j) {
  check_pair(x, w, "grad_wrt_warp");
  if (i >= x.length() || j >= x.channels())
    throw DomainError("grad_wrt_warp: index out of range");
  const std::size_t t = x.length();
  const double pos = clamp_pos(w.values[i], t);
  double g = 0.0;
  // Unit-width support: only tau within |pos - tau| < 1 contributes; the
  // case split at tau == pos gives the right-sided subgradient at kinks.
  const long lo = std::max(0L, static_cast<long>(std::floor(pos)) - 1);
  const long hi = std::min(static_cast<long>(t) - 1,
                           static_cast<long>(std::floor(pos)) + 1);
  for (long tau = lo; tau <= hi; ++tau) {
    const double dist = std::abs(pos - static_cast<double>(tau));
    if (dist >= 1.0) continue;
    g += (static_cast<double>(tau) >= pos ? 1.0 : -1.0) *
         x.frames.at(static_cast<std::size_t>(tau), j);
  }
  return g;
}

ResampleGradients resample_backward(const Sequence& x, const WarpFunction& w,
                                    const RealArray& d_out) {
  check_pair(x, w, "resample_backward");
  d_out.require_shape(x.frames.shape, "resample_backward");
  const std::size_t t = x.length();
  const std::size_t n = x.channels();
  ResampleGradients g;
  g.d_input = RealArray({t, n});
  g.d_positions.assign(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    const double pos = clamp_pos(w.values[i], t);
    const std::size_t k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    double dpos = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dy = d_out.at(i, j);
      if (dy != 0.0) {
        g.d_input.at(k, j) += dy * (1.0 - frac);
        if (frac != 0.0) g.d_input.at(k + 1, j) += dy * frac;
      }
      if (frac != 0.0) {
        dpos += dy * (x.frames.at(k + 1, j) - x.frames.at(k, j));
      } else {
        // Integer position: Eq-style case split keeps only tau == pos.
        dpos += dy * x.frames.at(k, j);
      }
    }
    g.d_positions[i] = dpos;
  }
  return g;
}

}  // namespace warpnet
