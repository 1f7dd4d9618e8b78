#pragma once

// Forward/backward primitives of the dilated CNN. All ops are templated on
// the scalar type and instantiated for float (training) and double (gradient
// checks).

#include <cstdint>
#include <span>
#include <vector>

#include "structalign/neural/tensor.hpp"

namespace structalign::neural {

struct DilatedKernelSpec {
  int kernel_size = 3;
  int dilation = 1;
  int in_channels = 1;
  int out_channels = 1;
  int stride = 1;
  int padding = 0;

  // m' = m + (d - 1)(m - 1)
  int effective_size() const { return kernel_size + (dilation - 1) * (kernel_size - 1); }
  int output_extent(int input_extent) const {
    return (input_extent + 2 * padding - effective_size()) / stride + 1;
  }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel_size * kernel_size;
  }
  // Throws ArgumentError on non-positive sizes and ShapeError when the
  // effective kernel exceeds the padded input.
  void validate(int input_height, int input_width) const;
};

// out(n, o, y, x) = b(o) + sum_{c,i,j} w(o, c, i, j) * in(n, c, y*s - pad + d*i, x*s - pad + d*j)
// Weights are laid out (out_channels, in_channels, m, m).
template <typename T>
Grid4<T> conv2d_dilated(const Grid4<T>& input, const DilatedKernelSpec& spec,
                        std::span<const T> weights, std::span<const T> bias);

template <typename T>
struct ConvGradients {
  Grid4<T> input;
  std::vector<T> weights;
  std::vector<T> bias;
};

template <typename T>
ConvGradients<T> conv2d_dilated_backward(const Grid4<T>& input, const DilatedKernelSpec& spec,
                                         std::span<const T> weights, const Grid4<T>& grad_output);

// Accumulating variant: adds into grad_weights/grad_bias, writes grad_input
// when non-null.
template <typename T>
void conv2d_dilated_backward_into(const Grid4<T>& input, const DilatedKernelSpec& spec,
                                  std::span<const T> weights, const Grid4<T>& grad_output,
                                  Grid4<T>* grad_input, std::span<T> grad_weights,
                                  std::span<T> grad_bias);

template <typename T>
Grid4<T> relu(const Grid4<T>& input);
// `input` is the tensor that was fed to relu.
template <typename T>
Grid4<T> relu_backward(const Grid4<T>& input, const Grid4<T>& grad_output);

template <typename T>
struct PoolResult {
  Grid4<T> output;
  std::vector<std::int32_t> argmax;  // flat input index per output cell
};

// 2x2 window, stride 2, floor on odd extents. Ties go to the first maximum.
template <typename T>
PoolResult<T> max_pool2x2(const Grid4<T>& input);
template <typename T>
Grid4<T> max_pool2x2_backward(const std::array<int, 4>& input_shape,
                              std::span<const std::int32_t> argmax, const Grid4<T>& grad_output);

template <typename T>
struct BatchNormCache {
  std::vector<T> normalized;  // x_hat, same layout as the input
  std::vector<T> inv_std;     // per channel
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased
  std::array<int, 4> shape{};
};

struct BatchNormOptions {
  double momentum = 0.9;
  double eps = 1e-5;
};

// Per-channel normalization. Train mode uses batch statistics and fills
// `cache`; infer mode uses the running statistics.
template <typename T>
Grid4<T> batch_norm(const Grid4<T>& input, std::span<const T> gamma, std::span<const T> beta,
                    std::span<const T> running_mean, std::span<const T> running_var, Mode mode,
                    const BatchNormOptions& options, BatchNormCache<T>* cache);

// running = momentum * running + (1 - momentum) * batch (unbiased variance).
template <typename T>
void update_running_stats(const BatchNormCache<T>& cache, const BatchNormOptions& options,
                          std::span<T> running_mean, std::span<T> running_var);

template <typename T>
Grid4<T> batch_norm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                             const Grid4<T>& grad_output, std::span<T> grad_gamma,
                             std::span<T> grad_beta);

// Inverted dropout: kept units are scaled by 1/(1-p). Infer mode is the
// identity and leaves `mask` empty.
template <typename T>
Grid4<T> dropout(const Grid4<T>& input, double p, Mode mode, Rng& rng, std::vector<T>* mask);
template <typename T>
Grid4<T> dropout_backward(std::span<const T> mask, const Grid4<T>& grad_output);

// (N, C, H, W) -> (N, C*H*W, 1, 1)
template <typename T>
Grid4<T> flatten(const Grid4<T>& input);

// y = x W^T + b with W laid out (out_features, in_features). The input is
// read as (N, in_features) regardless of its C/H/W split.
template <typename T>
Grid4<T> fully_connected(const Grid4<T>& input, std::span<const T> weights,
                         std::span<const T> bias, int out_features);

template <typename T>
void fully_connected_backward(const Grid4<T>& input, std::span<const T> weights,
                              const Grid4<T>& grad_output, Grid4<T>* grad_input,
                              std::span<T> grad_weights, std::span<T> grad_bias);

}  // namespace structalign::neural
