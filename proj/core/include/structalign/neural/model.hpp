#pragma once

// Progressively dilated CNN regressing 32 inflection-point coordinates from a
// square distance grid:
//   3 x [conv (dilation 1, d2, d3) -> relu -> batch norm -> 2x2 max pool]
//   -> flatten -> fc -> relu -> dropout -> fc -> relu -> dropout -> fc(64)

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "structalign/inflection.hpp"
#include "structalign/neural/layers.hpp"
#include "structalign/neural/tensor.hpp"
#include "structalign/simgrid.hpp"

namespace structalign::neural {

struct ModelConfig {
  int input_size = kDefaultInputSize;
  int dilation_layer2 = 2;
  int dilation_layer3 = 3;
  std::array<int, 3> channels{16, 32, 64};
  std::array<int, 3> kernel_sizes{3, 3, 3};
  std::array<int, 2> fc_sizes{4096, 1024};
  int output_dim = 2 * kMaxInflectionPoints;
  double dropout_p = 0.5;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;

  std::array<int, 3> dilations() const { return {1, dilation_layer2, dilation_layer3}; }
  // Spec of conv layer `layer` (0-based), padded to preserve extent.
  DilatedKernelSpec conv_spec(int layer) const;
  // Spatial extent entering conv layer `layer`; layer 3 gives the extent
  // after the last pool.
  int extent_before(int layer) const;
  int flatten_size() const;
  // "DCNN_2+3", or "CNN_1+1" without dilation.
  std::string name() const;
  void validate() const;
};

template <typename T>
struct ForwardCache {
  std::array<Grid4<T>, 3> conv_input;
  std::array<Grid4<T>, 3> conv_output;  // before relu
  std::array<BatchNormCache<T>, 3> bn;
  std::array<std::array<int, 4>, 3> pool_input_shape{};
  std::array<std::vector<std::int32_t>, 3> pool_argmax;
  std::array<Grid4<T>, 3> fc_input;
  std::array<Grid4<T>, 2> fc_output;  // fc1/fc2 before relu
  std::array<std::vector<T>, 2> dropout_mask;
};

template <typename T>
class DilatedCnn {
 public:
  // Kaiming-uniform (fan-in) weights, zero biases, gamma = 1, beta = 0.
  DilatedCnn(const ModelConfig& config, std::uint64_t seed);
  // Adopts existing tensors; shapes are checked against the config.
  DilatedCnn(const ModelConfig& config, TensorList<T> parameters, TensorList<T> buffers);

  const ModelConfig& config() const { return config_; }
  TensorList<T>& parameters() { return params_; }
  const TensorList<T>& parameters() const { return params_; }
  TensorList<T>& buffers() { return buffers_; }
  const TensorList<T>& buffers() const { return buffers_; }
  std::size_t parameter_count() const;

  // Zero tensors shaped like parameters().
  TensorList<T> make_gradients() const;

  // Input (N, 1, S, S) -> output (N, 64, 1, 1). In train mode the batch-norm
  // running statistics are updated and `cache` (if given) receives what
  // backward() needs.
  Grid4<T> forward(const Grid4<T>& input, Mode mode, Rng& rng, ForwardCache<T>* cache = nullptr);

  // Inference without touching any state; safe to call concurrently.
  Grid4<T> infer(const Grid4<T>& input) const;
  std::vector<T> infer(const NetworkInputGrid& grid) const;

  // Accumulates parameter gradients into `grads`.
  void backward(const ForwardCache<T>& cache, const Grid4<T>& grad_output, TensorList<T>& grads,
                Grid4<T>* grad_input = nullptr) const;

  static std::size_t conv_weight_index(int layer) { return 4 * layer; }
  static std::size_t conv_bias_index(int layer) { return 4 * layer + 1; }
  static std::size_t bn_gamma_index(int layer) { return 4 * layer + 2; }
  static std::size_t bn_beta_index(int layer) { return 4 * layer + 3; }
  static std::size_t fc_weight_index(int layer) { return 12 + 2 * layer; }
  static std::size_t fc_bias_index(int layer) { return 13 + 2 * layer; }
  static std::size_t running_mean_index(int layer) { return 2 * layer; }
  static std::size_t running_var_index(int layer) { return 2 * layer + 1; }

 private:
  Grid4<T> run(const Grid4<T>& input, Mode mode, Rng* rng, ForwardCache<T>* cache) const;

  ModelConfig config_;
  TensorList<T> params_;
  TensorList<T> buffers_;
};

// Input pixels that can influence output unit (y, x) of conv block `layer`
// (1-based, measured after its pool). Propagates dependency support back
// through every pooling window and dilated kernel tap. Row-major S x S.
std::vector<std::uint8_t> receptive_field_mask(const ModelConfig& config, int layer, int y, int x);

extern template class DilatedCnn<float>;
extern template class DilatedCnn<double>;

}  // namespace structalign::neural
