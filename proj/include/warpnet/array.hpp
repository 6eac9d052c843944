#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "warpnet/errors.hpp"

namespace warpnet {

// Dense row-major real array; the carrier for activations, parameters and
// gradients.
struct RealArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  RealArray() = default;
  RealArray(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // 2-D accessors (rows x cols).
  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }

  // 3-D accessors.
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const RealArray& o) const { return shape == o.shape; }

  void require_shape(const std::vector<std::size_t>& s,
                     const char* what) const {
    if (shape != s) throw ShapeError(std::string("shape mismatch in ") + what);
  }
};

}  // namespace warpnet
