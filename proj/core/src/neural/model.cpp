#include "structalign/neural/model.hpp"

#include <cmath>
#include <string>

#include "structalign/error.hpp"

namespace structalign::neural {

DilatedKernelSpec ModelConfig::conv_spec(int layer) const {
  DilatedKernelSpec spec;
  spec.kernel_size = kernel_sizes[layer];
  spec.dilation = dilations()[layer];
  spec.in_channels = layer == 0 ? 1 : channels[layer - 1];
  spec.out_channels = channels[layer];
  spec.stride = 1;
  spec.padding = spec.dilation * (spec.kernel_size - 1) / 2;
  return spec;
}

int ModelConfig::extent_before(int layer) const {
  int extent = input_size;
  for (int l = 0; l < layer; ++l) extent /= 2;
  return extent;
}

int ModelConfig::flatten_size() const {
  const int e = extent_before(3);
  return channels[2] * e * e;
}

std::string ModelConfig::name() const {
  const std::string prefix = (dilation_layer2 == 1 && dilation_layer3 == 1) ? "CNN" : "DCNN";
  return prefix + "_" + std::to_string(dilation_layer2) + "+" + std::to_string(dilation_layer3);
}

void ModelConfig::validate() const {
  if (input_size < 8) throw ArgumentError("input size must be at least 8");
  if (dilation_layer2 < 1 || dilation_layer3 < 1) throw ArgumentError("dilations must be >= 1");
  for (int l = 0; l < 3; ++l) {
    if (channels[l] < 1) throw ArgumentError("channel counts must be positive");
    if (kernel_sizes[l] < 1 || kernel_sizes[l] % 2 == 0) {
      throw ArgumentError("kernel sizes must be odd and positive");
    }
  }
  if (fc_sizes[0] < 1 || fc_sizes[1] < 1) throw ArgumentError("fc sizes must be positive");
  if (output_dim != 2 * kMaxInflectionPoints) {
    throw ArgumentError("output_dim must be " + std::to_string(2 * kMaxInflectionPoints));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ArgumentError("dropout must be in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ArgumentError("bad batch-norm momentum");
  if (!(bn_eps > 0.0)) throw ArgumentError("batch-norm eps must be positive");
}

namespace {

template <typename T>
Tensor<T> make_tensor(std::string name, std::vector<int> shape, T fill) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return Tensor<T>{std::move(name), std::move(shape), std::vector<T>(n, fill)};
}

template <typename T>
TensorList<T> parameter_layout(const ModelConfig& c) {
  TensorList<T> p;
  for (int l = 0; l < 3; ++l) {
    const auto spec = c.conv_spec(l);
    const std::string id = std::to_string(l + 1);
    p.push_back(make_tensor<T>("conv" + id + ".weight",
                               {spec.out_channels, spec.in_channels, spec.kernel_size,
                                spec.kernel_size},
                               T(0)));
    p.push_back(make_tensor<T>("conv" + id + ".bias", {spec.out_channels}, T(0)));
    p.push_back(make_tensor<T>("bn" + id + ".weight", {spec.out_channels}, T(1)));
    p.push_back(make_tensor<T>("bn" + id + ".bias", {spec.out_channels}, T(0)));
  }
  const int widths[4] = {c.flatten_size(), c.fc_sizes[0], c.fc_sizes[1], c.output_dim};
  for (int k = 0; k < 3; ++k) {
    const std::string id = std::to_string(k + 1);
    p.push_back(make_tensor<T>("fc" + id + ".weight", {widths[k + 1], widths[k]}, T(0)));
    p.push_back(make_tensor<T>("fc" + id + ".bias", {widths[k + 1]}, T(0)));
  }
  return p;
}

template <typename T>
TensorList<T> buffer_layout(const ModelConfig& c) {
  TensorList<T> b;
  for (int l = 0; l < 3; ++l) {
    const std::string id = std::to_string(l + 1);
    b.push_back(make_tensor<T>("bn" + id + ".running_mean", {c.channels[l]}, T(0)));
    b.push_back(make_tensor<T>("bn" + id + ".running_var", {c.channels[l]}, T(1)));
  }
  return b;
}

template <typename T>
void check_layout(const TensorList<T>& expected, const TensorList<T>& actual, const char* what) {
  if (expected.size() != actual.size()) {
    throw ShapeError(what, "expected " + std::to_string(expected.size()) + " tensors, got " +
                               std::to_string(actual.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != actual[i].name || expected[i].shape != actual[i].shape ||
        actual[i].data.size() != expected[i].data.size()) {
      throw ShapeError(expected[i].name, "tensor does not match model config");
    }
  }
}

template <typename T>
std::span<const T> cspan(const Tensor<T>& t) {
  return std::span<const T>(t.data);
}

}  // namespace

template <typename T>
DilatedCnn<T>::DilatedCnn(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  params_ = parameter_layout<T>(config_);
  buffers_ = buffer_layout<T>(config_);
  Rng rng(seed);
  auto init = [&rng](Tensor<T>& t, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (T& v : t.data) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  };
  for (int l = 0; l < 3; ++l) {
    const auto spec = config_.conv_spec(l);
    init(params_[conv_weight_index(l)], spec.in_channels * spec.kernel_size * spec.kernel_size);
  }
  for (int k = 0; k < 3; ++k) {
    auto& w = params_[fc_weight_index(k)];
    init(w, w.shape[1]);
  }
}

template <typename T>
DilatedCnn<T>::DilatedCnn(const ModelConfig& config, TensorList<T> parameters,
                          TensorList<T> buffers)
    : config_(config), params_(std::move(parameters)), buffers_(std::move(buffers)) {
  config_.validate();
  check_layout(parameter_layout<T>(config_), params_, "parameters");
  check_layout(buffer_layout<T>(config_), buffers_, "buffers");
}

template <typename T>
std::size_t DilatedCnn<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += t.data.size();
  return n;
}

template <typename T>
TensorList<T> DilatedCnn<T>::make_gradients() const {
  TensorList<T> g = params_;
  for (auto& t : g) std::fill(t.data.begin(), t.data.end(), T(0));
  return g;
}

template <typename T>
Grid4<T> DilatedCnn<T>::run(const Grid4<T>& input, Mode mode, Rng* rng,
                            ForwardCache<T>* cache) const {
  if (input.channels() != 1 || input.height() != config_.input_size ||
      input.width() != config_.input_size) {
    throw ShapeError("input", "expected (N, 1, " + std::to_string(config_.input_size) + ", " +
                                  std::to_string(config_.input_size) + ")");
  }
  const BatchNormOptions bn_opts{config_.bn_momentum, config_.bn_eps};
  Grid4<T> x = input;
  for (int l = 0; l < 3; ++l) {
    const auto spec = config_.conv_spec(l);
    Grid4<T> z = conv2d_dilated<T>(x, spec, cspan(params_[conv_weight_index(l)]),
                                   cspan(params_[conv_bias_index(l)]));
    Grid4<T> a = relu(z);
    Grid4<T> b = batch_norm<T>(a, cspan(params_[bn_gamma_index(l)]),
                               cspan(params_[bn_beta_index(l)]),
                               cspan(buffers_[running_mean_index(l)]),
                               cspan(buffers_[running_var_index(l)]), mode, bn_opts,
                               cache ? &cache->bn[l] : nullptr);
    PoolResult<T> pooled = max_pool2x2(b);
    if (cache) {
      cache->conv_input[l] = std::move(x);
      cache->conv_output[l] = std::move(z);
      cache->pool_input_shape[l] = b.shape;
      cache->pool_argmax[l] = std::move(pooled.argmax);
    }
    x = std::move(pooled.output);
  }

  Grid4<T> h = flatten(x);
  for (int k = 0; k < 3; ++k) {
    Grid4<T> y = fully_connected<T>(h, cspan(params_[fc_weight_index(k)]),
                                    cspan(params_[fc_bias_index(k)]),
                                    params_[fc_weight_index(k)].shape[0]);
    if (cache) cache->fc_input[k] = std::move(h);
    if (k == 2) return y;
    Grid4<T> r = relu(y);
    std::vector<T>* mask = cache ? &cache->dropout_mask[k] : nullptr;
    if (mode == Mode::train && rng == nullptr) throw ArgumentError("train mode needs an RNG");
    Rng unused;
    h = dropout<T>(r, config_.dropout_p, mode, rng ? *rng : unused, mask);
    if (cache) cache->fc_output[k] = std::move(y);
  }
  return h;  // unreachable
}

template <typename T>
Grid4<T> DilatedCnn<T>::forward(const Grid4<T>& input, Mode mode, Rng& rng,
                                ForwardCache<T>* cache) {
  if (mode == Mode::infer) return run(input, mode, &rng, cache);
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  Grid4<T> out = run(input, mode, &rng, &c);
  const BatchNormOptions bn_opts{config_.bn_momentum, config_.bn_eps};
  for (int l = 0; l < 3; ++l) {
    update_running_stats<T>(c.bn[l], bn_opts, buffers_[running_mean_index(l)].data,
                            buffers_[running_var_index(l)].data);
  }
  return out;
}

template <typename T>
Grid4<T> DilatedCnn<T>::infer(const Grid4<T>& input) const {
  return run(input, Mode::infer, nullptr, nullptr);
}

template <typename T>
std::vector<T> DilatedCnn<T>::infer(const NetworkInputGrid& grid) const {
  const int s = config_.input_size;
  if (grid.size() != s) {
    throw ShapeError("input", "grid size " + std::to_string(grid.size()) +
                                  " does not match model input size " + std::to_string(s));
  }
  Grid4<T> in(1, 1, s, s);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) in(0, 0, y, x) = static_cast<T>(grid.values(y, x));
  }
  return infer(in).data;
}

template <typename T>
void DilatedCnn<T>::backward(const ForwardCache<T>& cache, const Grid4<T>& grad_output,
                             TensorList<T>& grads, Grid4<T>* grad_input) const {
  Grid4<T> g = grad_output;
  for (int k = 2; k >= 0; --k) {
    Grid4<T> gin;
    fully_connected_backward<T>(cache.fc_input[k], cspan(params_[fc_weight_index(k)]), g, &gin,
                                grads[fc_weight_index(k)].data, grads[fc_bias_index(k)].data);
    g = std::move(gin);
    if (k > 0) {
      g = dropout_backward<T>(cache.dropout_mask[k - 1], g);
      g = relu_backward(cache.fc_output[k - 1], g);
    }
  }

  const int e = config_.extent_before(3);
  g.shape = {g.batch(), config_.channels[2], e, e};
  for (int l = 2; l >= 0; --l) {
    g = max_pool2x2_backward<T>(cache.pool_input_shape[l], cache.pool_argmax[l], g);
    g = batch_norm_backward<T>(cache.bn[l], cspan(params_[bn_gamma_index(l)]), g,
                               grads[bn_gamma_index(l)].data, grads[bn_beta_index(l)].data);
    g = relu_backward(cache.conv_output[l], g);
    Grid4<T> gin;
    const bool need_input = l > 0 || grad_input != nullptr;
    conv2d_dilated_backward_into<T>(cache.conv_input[l], config_.conv_spec(l),
                                    cspan(params_[conv_weight_index(l)]), g,
                                    need_input ? &gin : nullptr, grads[conv_weight_index(l)].data,
                                    grads[conv_bias_index(l)].data);
    g = std::move(gin);
  }
  if (grad_input) *grad_input = std::move(g);
}

std::vector<std::uint8_t> receptive_field_mask(const ModelConfig& config, int layer, int y, int x) {
  config.validate();
  if (layer < 1 || layer > 3) throw ArgumentError("layer must be 1, 2 or 3");
  int extent = config.extent_before(layer);
  if (y < 0 || x < 0 || y >= extent || x >= extent) throw ArgumentError("unit outside layer output");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(extent) * extent, 0);
  mask[static_cast<std::size_t>(y) * extent + x] = 1;

  for (int l = layer - 1; l >= 0; --l) {
    // Through the 2x2 pool.
    const int conv_extent = config.extent_before(l);
    std::vector<std::uint8_t> pre(static_cast<std::size_t>(conv_extent) * conv_extent, 0);
    for (int py = 0; py < extent; ++py) {
      for (int px = 0; px < extent; ++px) {
        if (!mask[static_cast<std::size_t>(py) * extent + px]) continue;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            pre[static_cast<std::size_t>(2 * py + dy) * conv_extent + 2 * px + dx] = 1;
          }
        }
      }
    }
    // Through batch norm / relu (pointwise) and the dilated kernel taps.
    const auto spec = config.conv_spec(l);
    std::vector<std::uint8_t> in(pre.size(), 0);
    for (int oy = 0; oy < conv_extent; ++oy) {
      for (int ox = 0; ox < conv_extent; ++ox) {
        if (!pre[static_cast<std::size_t>(oy) * conv_extent + ox]) continue;
        for (int ky = 0; ky < spec.kernel_size; ++ky) {
          const int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          if (iy < 0 || iy >= conv_extent) continue;
          for (int kx = 0; kx < spec.kernel_size; ++kx) {
            const int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            if (ix >= 0 && ix < conv_extent) in[static_cast<std::size_t>(iy) * conv_extent + ix] = 1;
          }
        }
      }
    }
    mask = std::move(in);
    extent = conv_extent;
  }
  return mask;
}

template class DilatedCnn<float>;
template class DilatedCnn<double>;

}  // namespace structalign::neural
