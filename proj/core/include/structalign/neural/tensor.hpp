#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "structalign/random.hpp"

namespace structalign::neural {

using structalign::Rng;
using structalign::uniform01;

enum class Mode { train, infer };

// Dense NCHW tensor.
template <typename T>
struct Grid4 {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  Grid4() = default;
  Grid4(int n, int c, int h, int w, T fill = T(0))
      : shape{n, c, h, w}, data(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int batch() const { return shape[0]; }
  int channels() const { return shape[1]; }
  int height() const { return shape[2]; }
  int width() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const { return static_cast<std::size_t>(shape[1]) * shape[2] * shape[3]; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x;
  }
  T& operator()(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }
  const T& operator()(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }

  std::span<T> sample(int n) { return std::span(data).subspan(n * sample_size(), sample_size()); }
  std::span<const T> sample(int n) const {
    return std::span(data).subspan(n * sample_size(), sample_size());
  }

  bool all_finite() const {
    for (const T& v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

// Named parameter or buffer array.
template <typename T>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> data;
};

template <typename T>
using TensorList = std::vector<Tensor<T>>;

}  // namespace structalign::neural
