#include "structalign/neural/train.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "structalign/error.hpp"
#include "structalign/neural/targets.hpp"

namespace structalign::neural {

namespace {

void check_examples(const ModelConfig& config, std::span<const TrainingExample> examples,
                    const char* split) {
  const std::size_t in = static_cast<std::size_t>(config.input_size) * config.input_size;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].input.size() != in) {
      throw ShapeError("input", std::string(split) + " example " + std::to_string(i) +
                                    " has " + std::to_string(examples[i].input.size()) +
                                    " pixels, expected " + std::to_string(in));
    }
    if (examples[i].target.size() != static_cast<std::size_t>(config.output_dim)) {
      throw ShapeError("target", std::string(split) + " example " + std::to_string(i) +
                                     " has the wrong target length");
    }
  }
}

Grid4<float> gather_inputs(const ModelConfig& config, std::span<const TrainingExample> examples,
                           std::span<const std::size_t> order) {
  const int s = config.input_size;
  Grid4<float> batch(static_cast<int>(order.size()), 1, s, s);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& src = examples[order[i]].input;
    std::copy(src.begin(), src.end(), batch.sample(static_cast<int>(i)).begin());
  }
  return batch;
}

// Fisher-Yates driven by uniform01 so the order is the same on every
// standard library.
void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::string format_loss(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Adam {
  TensorList<float> m;
  TensorList<float> v;
  long step = 0;

  void apply(TensorList<float>& params, const TensorList<float>& grads, const TrainConfig& c) {
    if (m.empty()) {
      m = grads;
      for (auto& t : m) std::fill(t.data.begin(), t.data.end(), 0.0f);
      v = m;
    }
    ++step;
    const double corr1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    const float lr = static_cast<float>(c.learning_rate * std::sqrt(corr2) / corr1);
    const float b1 = static_cast<float>(c.beta1);
    const float b2 = static_cast<float>(c.beta2);
    const float eps = static_cast<float>(c.adam_eps * std::sqrt(corr2));
    for (std::size_t k = 0; k < params.size(); ++k) {
      float* p = params[k].data.data();
      const float* g = grads[k].data.data();
      float* mk = m[k].data.data();
      float* vk = v[k].data.data();
      const std::size_t n = params[k].data.size();
      for (std::size_t i = 0; i < n; ++i) {
        mk[i] = b1 * mk[i] + (1.0f - b1) * g[i];
        vk[i] = b2 * vk[i] + (1.0f - b2) * g[i] * g[i];
        p[i] -= lr * mk[i] / (std::sqrt(vk[i]) + eps);
      }
    }
  }
};

}  // namespace

double evaluate_loss(const DilatedCnn<float>& model, std::span<const TrainingExample> examples,
                     int batch_size) {
  if (examples.empty()) throw ArgumentError("cannot evaluate loss on an empty set");
  if (batch_size < 1) throw ArgumentError("batch size must be positive");
  check_examples(model.config(), examples, "evaluation");
  double sum = 0.0;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t count = std::min<std::size_t>(batch_size, examples.size() - start);
    const std::span<const std::size_t> idx(order.data() + start, count);
    const Grid4<float> out = model.infer(gather_inputs(model.config(), examples, idx));
    for (std::size_t i = 0; i < count; ++i) {
      sum += l2_loss(out.sample(static_cast<int>(i)), examples[idx[i]].target);
    }
  }
  return sum / static_cast<double>(examples.size());
}

TrainResult train(DilatedCnn<float>& model, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set, const TrainConfig& config) {
  if (train_set.empty()) throw ArgumentError("training split is empty");
  if (validation_set.empty()) throw ArgumentError("validation split is empty");
  if (config.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (config.batch_size < 1) throw ArgumentError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  check_examples(model.config(), train_set, "training");
  check_examples(model.config(), validation_set, "validation");

  TrainResult result;
  double best = evaluate_loss(model, validation_set, config.batch_size);
  result.checkpoint = ModelCheckpoint::from_model(model, 0, best);

  Rng rng(config.seed);
  Adam adam;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const int out_dim = model.config().output_dim;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    double batch_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t count = std::min(bs, order.size() - start);
      // A lone trailing sample is folded into the previous batch so that
      // batch statistics are never taken over a single example.
      if (order.size() - start - count == 1) ++count;
      const std::span<const std::size_t> idx(order.data() + start, count);
      start += count;

      ForwardCache<float> cache;
      const Grid4<float> out =
          model.forward(gather_inputs(model.config(), train_set, idx), Mode::train, rng, &cache);
      Grid4<float> grad(static_cast<int>(count), out_dim, 1, 1);
      double loss = 0.0;
      const double scale = 2.0 / (static_cast<double>(count) * out_dim);
      for (std::size_t i = 0; i < count; ++i) {
        const auto& target = train_set[idx[i]].target;
        for (int k = 0; k < out_dim; ++k) {
          const std::size_t j = i * out_dim + k;
          const double d = static_cast<double>(out.data[j]) - target[k];
          loss += d * d;
          grad.data[j] = static_cast<float>(scale * d);
        }
      }
      loss /= static_cast<double>(count) * out_dim;
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch starting at " + std::to_string(start - count) +
                            " (learning rate " + format_loss(config.learning_rate) + ")");
      }
      batch_loss_sum += loss * static_cast<double>(count);
      TensorList<float> grads = model.make_gradients();
      model.backward(cache, grad, grads);
      adam.apply(model.parameters(), grads, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = evaluate_loss(model, train_set, config.batch_size);
    rec.batch_loss = batch_loss_sum / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(model, validation_set, config.batch_size);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw TrainingError("non-finite loss after epoch " + std::to_string(epoch) + " (train " +
                          format_loss(rec.train_loss) + ", validation " +
                          format_loss(rec.val_loss) + ")");
    }
    result.history.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);

    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.checkpoint = ModelCheckpoint::from_model(model, epoch, best);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  model = result.checkpoint.to_model();
  return result;
}

std::string training_log_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + format_loss(r.train_loss) + ',' +
           format_loss(r.val_loss) + '\n';
  }
  return out;
}

}  // namespace structalign::neural
