#pragma once

#include <cstddef>
#include <optional>

#include "warpnet/array.hpp"
#include "warpnet/warp.hpp"

namespace warpnet {

// Discrete multivariate time series: frames is T x N.
struct Sequence {
  RealArray frames;
  std::optional<int> label;

  std::size_t length() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
  std::size_t channels() const {
    return frames.shape.size() < 2 ? 0 : frames.shape[1];
  }
};

Sequence make_sequence(std::size_t t, std::size_t n,
                       std::optional<int> label = std::nullopt);

// Y[i] = X interpolated at w.values[i], per channel. Positions within 1e-9 of
// an integer are snapped so the identity warp is an exact no-op.
Sequence warp_sequence(const Sequence& x, const WarpFunction& w);

// Sensitivity of output frame i to input frame tau (shared across channels):
// max(0, 1 - |pos_i - tau|).
double grad_wrt_input(const WarpFunction& w, std::size_t i, std::size_t tau);

// Sensitivity of output entry (i, j) to the warp position pos_i: the
// case-split sum over the unit-width support (the interpolated segment slope
// away from integer positions).
double grad_wrt_warp(const Sequence& x, const WarpFunction& w, std::size_t i,
                     std::size_t j);

struct ResampleGradients {
  RealArray d_input;            // T x N
  std::vector<double> d_positions;  // length T
};

// Backward pass of warp_sequence: routes dY into input-frame and
// warp-position gradients in O(T*N) using the unit-width support.
ResampleGradients resample_backward(const Sequence& x, const WarpFunction& w,
                                    const RealArray& d_out);

}  // namespace warpnet
