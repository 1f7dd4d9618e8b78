#include "structalign/neural/layers.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Core>

#include "structalign/error.hpp"

namespace structalign::neural {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Unfolds one sample into a (C*m*m) x (Hout*Wout) matrix of dilated taps.
template <typename T>
void im2col(const Grid4<T>& input, int n, const DilatedKernelSpec& spec, int out_h, int out_w,
            MatR<T>& cols) {
  const int m = spec.kernel_size;
  const int H = input.height();
  const int W = input.width();
  cols.resize(static_cast<Eigen::Index>(spec.in_channels) * m * m,
              static_cast<Eigen::Index>(out_h) * out_w);
  for (int c = 0; c < spec.in_channels; ++c) {
    const T* plane = &input.data[input.index(n, c, 0, 0)];
    for (int ky = 0; ky < m; ++ky) {
      for (int kx = 0; kx < m; ++kx) {
        T* row = cols.row((c * m + ky) * m + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          T* dst = row + static_cast<std::size_t>(oy) * out_w;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the input plane.
template <typename T>
void col2im(const MatR<T>& cols, int n, const DilatedKernelSpec& spec, int out_h, int out_w,
            Grid4<T>& grad_input) {
  const int m = spec.kernel_size;
  const int H = grad_input.height();
  const int W = grad_input.width();
  for (int c = 0; c < spec.in_channels; ++c) {
    T* plane = &grad_input.data[grad_input.index(n, c, 0, 0)];
    for (int ky = 0; ky < m; ++ky) {
      for (int kx = 0; kx < m; ++kx) {
        const T* row = cols.row((c * m + ky) * m + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          if (iy < 0 || iy >= H) continue;
          const T* src = row + static_cast<std::size_t>(oy) * out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_dim(const char* name, long expected, long actual) {
  if (expected != actual) {
    throw ShapeError(name, "expected " + std::to_string(expected) + ", got " +
                               std::to_string(actual));
  }
}

}  // namespace

void DilatedKernelSpec::validate(int input_height, int input_width) const {
  if (kernel_size < 1 || dilation < 1 || in_channels < 1 || out_channels < 1 || stride < 1 ||
      padding < 0) {
    throw ArgumentError("invalid dilated kernel spec");
  }
  if (effective_size() > input_height + 2 * padding) {
    throw ShapeError("height", "effective kernel " + std::to_string(effective_size()) +
                                   " exceeds padded input " +
                                   std::to_string(input_height + 2 * padding));
  }
  if (effective_size() > input_width + 2 * padding) {
    throw ShapeError("width", "effective kernel " + std::to_string(effective_size()) +
                                  " exceeds padded input " +
                                  std::to_string(input_width + 2 * padding));
  }
}

template <typename T>
Grid4<T> conv2d_dilated(const Grid4<T>& input, const DilatedKernelSpec& spec,
                        std::span<const T> weights, std::span<const T> bias) {
  check_dim("channels", spec.in_channels, input.channels());
  spec.validate(input.height(), input.width());
  check_dim("weights", static_cast<long>(spec.weight_count()), static_cast<long>(weights.size()));
  check_dim("bias", spec.out_channels, static_cast<long>(bias.size()));

  const int out_h = spec.output_extent(input.height());
  const int out_w = spec.output_extent(input.width());
  const Eigen::Index K = static_cast<Eigen::Index>(spec.in_channels) * spec.kernel_size *
                         spec.kernel_size;
  const Eigen::Index L = static_cast<Eigen::Index>(out_h) * out_w;
  Grid4<T> out(input.batch(), spec.out_channels, out_h, out_w);
  Eigen::Map<const MatR<T>> w(weights.data(), spec.out_channels, K);
  Eigen::Map<const VecX<T>> b(bias.data(), spec.out_channels);
  MatR<T> cols;
  for (int n = 0; n < input.batch(); ++n) {
    im2col(input, n, spec, out_h, out_w, cols);
    Eigen::Map<MatR<T>> y(&out.data[out.index(n, 0, 0, 0)], spec.out_channels, L);
    y.noalias() = w * cols;
    y.colwise() += b;
  }
  return out;
}

template <typename T>
void conv2d_dilated_backward_into(const Grid4<T>& input, const DilatedKernelSpec& spec,
                                  std::span<const T> weights, const Grid4<T>& grad_output,
                                  Grid4<T>* grad_input, std::span<T> grad_weights,
                                  std::span<T> grad_bias) {
  check_dim("channels", spec.in_channels, input.channels());
  spec.validate(input.height(), input.width());
  const int out_h = spec.output_extent(input.height());
  const int out_w = spec.output_extent(input.width());
  check_dim("batch", input.batch(), grad_output.batch());
  check_dim("out_channels", spec.out_channels, grad_output.channels());
  check_dim("out_height", out_h, grad_output.height());
  check_dim("out_width", out_w, grad_output.width());
  check_dim("weights", static_cast<long>(spec.weight_count()), static_cast<long>(weights.size()));
  check_dim("grad_weights", static_cast<long>(spec.weight_count()),
            static_cast<long>(grad_weights.size()));
  check_dim("grad_bias", spec.out_channels, static_cast<long>(grad_bias.size()));

  const Eigen::Index K = static_cast<Eigen::Index>(spec.in_channels) * spec.kernel_size *
                         spec.kernel_size;
  const Eigen::Index L = static_cast<Eigen::Index>(out_h) * out_w;
  Eigen::Map<const MatR<T>> w(weights.data(), spec.out_channels, K);
  Eigen::Map<MatR<T>> gw(grad_weights.data(), spec.out_channels, K);
  Eigen::Map<VecX<T>> gb(grad_bias.data(), spec.out_channels);
  if (grad_input) *grad_input = Grid4<T>(input.batch(), input.channels(), input.height(), input.width());

  MatR<T> cols;
  MatR<T> grad_cols;
  for (int n = 0; n < input.batch(); ++n) {
    Eigen::Map<const MatR<T>> gy(&grad_output.data[grad_output.index(n, 0, 0, 0)],
                                 spec.out_channels, L);
    im2col(input, n, spec, out_h, out_w, cols);
    gw.noalias() += gy * cols.transpose();
    // Explicit loop: Eigen's vectorized reductions depend on pointer alignment.
    for (Eigen::Index o = 0; o < gy.rows(); ++o) {
      double acc = 0.0;
      for (Eigen::Index l = 0; l < L; ++l) acc += gy(o, l);
      gb(o) += static_cast<T>(acc);
    }
    if (grad_input) {
      grad_cols.noalias() = w.transpose() * gy;
      col2im(grad_cols, n, spec, out_h, out_w, *grad_input);
    }
  }
}

template <typename T>
ConvGradients<T> conv2d_dilated_backward(const Grid4<T>& input, const DilatedKernelSpec& spec,
                                         std::span<const T> weights, const Grid4<T>& grad_output) {
  ConvGradients<T> g;
  g.weights.assign(spec.weight_count(), T(0));
  g.bias.assign(spec.out_channels, T(0));
  conv2d_dilated_backward_into<T>(input, spec, weights, grad_output, &g.input, g.weights, g.bias);
  return g;
}

template <typename T>
Grid4<T> relu(const Grid4<T>& input) {
  Grid4<T> out = input;
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Grid4<T> relu_backward(const Grid4<T>& input, const Grid4<T>& grad_output) {
  if (input.shape != grad_output.shape) throw ShapeError("relu", "gradient shape differs from input");
  Grid4<T> g = grad_output;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    if (!(input.data[i] > T(0))) g.data[i] = T(0);
  }
  return g;
}

template <typename T>
PoolResult<T> max_pool2x2(const Grid4<T>& input) {
  const int oh = input.height() / 2;
  const int ow = input.width() / 2;
  if (oh == 0 || ow == 0) throw ShapeError("height/width", "max_pool2x2 needs extents >= 2");
  PoolResult<T> r;
  r.output = Grid4<T>(input.batch(), input.channels(), oh, ow);
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (int n = 0; n < input.batch(); ++n) {
    for (int c = 0; c < input.channels(); ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          std::size_t best = input.index(n, c, 2 * y, 2 * x);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t i = input.index(n, c, 2 * y + dy, 2 * x + dx);
              if (input.data[i] > input.data[best]) best = i;
            }
          }
          r.output.data[o] = input.data[best];
          r.argmax[o] = static_cast<std::int32_t>(best);
        }
      }
    }
  }
  return r;
}

template <typename T>
Grid4<T> max_pool2x2_backward(const std::array<int, 4>& input_shape,
                              std::span<const std::int32_t> argmax, const Grid4<T>& grad_output) {
  check_dim("argmax", static_cast<long>(grad_output.size()), static_cast<long>(argmax.size()));
  Grid4<T> g(input_shape[0], input_shape[1], input_shape[2], input_shape[3]);
  for (std::size_t o = 0; o < argmax.size(); ++o) g.data[argmax[o]] += grad_output.data[o];
  return g;
}

template <typename T>
Grid4<T> batch_norm(const Grid4<T>& input, std::span<const T> gamma, std::span<const T> beta,
                    std::span<const T> running_mean, std::span<const T> running_var, Mode mode,
                    const BatchNormOptions& options, BatchNormCache<T>* cache) {
  const int N = input.batch();
  const int C = input.channels();
  const std::size_t plane = static_cast<std::size_t>(input.height()) * input.width();
  check_dim("gamma", C, static_cast<long>(gamma.size()));
  check_dim("beta", C, static_cast<long>(beta.size()));
  check_dim("running_mean", C, static_cast<long>(running_mean.size()));
  check_dim("running_var", C, static_cast<long>(running_var.size()));

  Grid4<T> out(N, C, input.height(), input.width());
  BatchNormCache<T> local;
  BatchNormCache<T>& bc = cache ? *cache : local;
  const bool training = mode == Mode::train;
  if (training) {
    bc.shape = input.shape;
    bc.normalized.resize(input.size());
    bc.inv_std.resize(C);
    bc.batch_mean.assign(C, 0.0);
    bc.batch_var.assign(C, 0.0);
  }
  const double count = static_cast<double>(N) * plane;
  for (int c = 0; c < C; ++c) {
    double mean;
    double var;
    if (training) {
      double sum = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* x = &input.data[input.index(n, c, 0, 0)];
        for (std::size_t i = 0; i < plane; ++i) sum += x[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* x = &input.data[input.index(n, c, 0, 0)];
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = x[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      bc.batch_mean[c] = mean;
      bc.batch_var[c] = var;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + options.eps));
    const T m = static_cast<T>(mean);
    if (training) bc.inv_std[c] = inv_std;
    for (int n = 0; n < N; ++n) {
      const std::size_t base = input.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const T xhat = (input.data[base + i] - m) * inv_std;
        if (training) bc.normalized[base + i] = xhat;
        out.data[base + i] = gamma[c] * xhat + beta[c];
      }
    }
  }
  return out;
}

template <typename T>
void update_running_stats(const BatchNormCache<T>& cache, const BatchNormOptions& options,
                          std::span<T> running_mean, std::span<T> running_var) {
  const double count = static_cast<double>(cache.shape[0]) * cache.shape[2] * cache.shape[3];
  const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
  for (std::size_t c = 0; c < cache.batch_mean.size(); ++c) {
    running_mean[c] = static_cast<T>(options.momentum * running_mean[c] +
                                     (1.0 - options.momentum) * cache.batch_mean[c]);
    running_var[c] = static_cast<T>(options.momentum * running_var[c] +
                                    (1.0 - options.momentum) * cache.batch_var[c] * unbias);
  }
}

template <typename T>
Grid4<T> batch_norm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                             const Grid4<T>& grad_output, std::span<T> grad_gamma,
                             std::span<T> grad_beta) {
  if (grad_output.shape != cache.shape) {
    throw ShapeError("batch_norm", "gradient shape differs from cached input");
  }
  const int N = cache.shape[0];
  const int C = cache.shape[1];
  const std::size_t plane = static_cast<std::size_t>(cache.shape[2]) * cache.shape[3];
  const double count = static_cast<double>(N) * plane;
  Grid4<T> g(N, C, cache.shape[2], cache.shape[3]);
  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < N; ++n) {
      const std::size_t base = g.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += grad_output.data[base + i];
        sum_dy_xhat += static_cast<double>(grad_output.data[base + i]) * cache.normalized[base + i];
      }
    }
    grad_gamma[c] += static_cast<T>(sum_dy_xhat);
    grad_beta[c] += static_cast<T>(sum_dy);
    const double scale = static_cast<double>(gamma[c]) * cache.inv_std[c] / count;
    for (int n = 0; n < N; ++n) {
      const std::size_t base = g.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        g.data[base + i] = static_cast<T>(
            scale * (count * grad_output.data[base + i] - sum_dy -
                     cache.normalized[base + i] * sum_dy_xhat));
      }
    }
  }
  return g;
}

template <typename T>
Grid4<T> dropout(const Grid4<T>& input, double p, Mode mode, Rng& rng, std::vector<T>* mask) {
  if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("dropout probability must be in [0, 1)");
  if (mode == Mode::infer || p == 0.0) {
    if (mask) mask->clear();
    return input;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> local;
  std::vector<T>& m = mask ? *mask : local;
  m.resize(input.size());
  Grid4<T> out = input;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    m[i] = uniform01(rng) < p ? T(0) : keep_scale;
    out.data[i] *= m[i];
  }
  return out;
}

template <typename T>
Grid4<T> dropout_backward(std::span<const T> mask, const Grid4<T>& grad_output) {
  if (mask.empty()) return grad_output;
  check_dim("dropout_mask", static_cast<long>(grad_output.size()), static_cast<long>(mask.size()));
  Grid4<T> g = grad_output;
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= mask[i];
  return g;
}

template <typename T>
Grid4<T> flatten(const Grid4<T>& input) {
  Grid4<T> out;
  out.shape = {input.batch(), static_cast<int>(input.sample_size()), 1, 1};
  out.data = input.data;
  return out;
}

template <typename T>
Grid4<T> fully_connected(const Grid4<T>& input, std::span<const T> weights,
                         std::span<const T> bias, int out_features) {
  const auto in_features = static_cast<Eigen::Index>(input.sample_size());
  check_dim("fc_weights", static_cast<long>(out_features * in_features),
            static_cast<long>(weights.size()));
  check_dim("fc_bias", out_features, static_cast<long>(bias.size()));
  Grid4<T> out(input.batch(), out_features, 1, 1);
  Eigen::Map<const MatR<T>> x(input.data.data(), input.batch(), in_features);
  Eigen::Map<const MatR<T>> w(weights.data(), out_features, in_features);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), out_features);
  Eigen::Map<MatR<T>> y(out.data.data(), input.batch(), out_features);
  y.noalias() = x * w.transpose();
  y.rowwise() += b;
  return out;
}

template <typename T>
void fully_connected_backward(const Grid4<T>& input, std::span<const T> weights,
                              const Grid4<T>& grad_output, Grid4<T>* grad_input,
                              std::span<T> grad_weights, std::span<T> grad_bias) {
  const auto in_features = static_cast<Eigen::Index>(input.sample_size());
  const auto out_features = static_cast<Eigen::Index>(grad_output.sample_size());
  check_dim("batch", input.batch(), grad_output.batch());
  check_dim("fc_weights", static_cast<long>(out_features * in_features),
            static_cast<long>(weights.size()));
  check_dim("fc_grad_weights", static_cast<long>(weights.size()),
            static_cast<long>(grad_weights.size()));
  check_dim("fc_grad_bias", out_features, static_cast<long>(grad_bias.size()));
  Eigen::Map<const MatR<T>> x(input.data.data(), input.batch(), in_features);
  Eigen::Map<const MatR<T>> w(weights.data(), out_features, in_features);
  Eigen::Map<const MatR<T>> gy(grad_output.data.data(), input.batch(), out_features);
  Eigen::Map<MatR<T>> gw(grad_weights.data(), out_features, in_features);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(grad_bias.data(), out_features);
  gw.noalias() += gy.transpose() * x;
  for (Eigen::Index o = 0; o < gy.cols(); ++o) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < gy.rows(); ++n) acc += gy(n, o);
    gb(o) += static_cast<T>(acc);
  }
  if (grad_input) {
    *grad_input = Grid4<T>();
    grad_input->shape = input.shape;
    grad_input->data.resize(input.size());
    Eigen::Map<MatR<T>> gx(grad_input->data.data(), input.batch(), in_features);
    gx.noalias() = gy * w;
  }
}

#define STRUCTALIGN_INSTANTIATE_LAYERS(T)                                                      \
  template Grid4<T> conv2d_dilated<T>(const Grid4<T>&, const DilatedKernelSpec&,               \
                                      std::span<const T>, std::span<const T>);                 \
  template ConvGradients<T> conv2d_dilated_backward<T>(const Grid4<T>&, const DilatedKernelSpec&, \
                                                       std::span<const T>, const Grid4<T>&);   \
  template void conv2d_dilated_backward_into<T>(const Grid4<T>&, const DilatedKernelSpec&,     \
                                                std::span<const T>, const Grid4<T>&, Grid4<T>*, \
                                                std::span<T>, std::span<T>);                   \
  template Grid4<T> relu<T>(const Grid4<T>&);                                                  \
  template Grid4<T> relu_backward<T>(const Grid4<T>&, const Grid4<T>&);                        \
  template PoolResult<T> max_pool2x2<T>(const Grid4<T>&);                                      \
  template Grid4<T> max_pool2x2_backward<T>(const std::array<int, 4>&,                         \
                                            std::span<const std::int32_t>, const Grid4<T>&);   \
  template Grid4<T> batch_norm<T>(const Grid4<T>&, std::span<const T>, std::span<const T>,     \
                                  std::span<const T>, std::span<const T>, Mode,                \
                                  const BatchNormOptions&, BatchNormCache<T>*);                \
  template void update_running_stats<T>(const BatchNormCache<T>&, const BatchNormOptions&,     \
                                        std::span<T>, std::span<T>);                           \
  template Grid4<T> batch_norm_backward<T>(const BatchNormCache<T>&, std::span<const T>,       \
                                           const Grid4<T>&, std::span<T>, std::span<T>);       \
  template Grid4<T> dropout<T>(const Grid4<T>&, double, Mode, Rng&, std::vector<T>*);          \
  template Grid4<T> dropout_backward<T>(std::span<const T>, const Grid4<T>&);                  \
  template Grid4<T> flatten<T>(const Grid4<T>&);                                               \
  template Grid4<T> fully_connected<T>(const Grid4<T>&, std::span<const T>, std::span<const T>, \
                                       int);                                                   \
  template void fully_connected_backward<T>(const Grid4<T>&, std::span<const T>,               \
                                            const Grid4<T>&, Grid4<T>*, std::span<T>,          \
                                            std::span<T>);

STRUCTALIGN_INSTANTIATE_LAYERS(float)
STRUCTALIGN_INSTANTIATE_LAYERS(double)

#undef STRUCTALIGN_INSTANTIATE_LAYERS

}  // namespace structalign::neural
