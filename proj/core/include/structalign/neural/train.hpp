#pragma once

// Mini-batch Adam training with early stopping on validation loss.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "structalign/neural/checkpoint.hpp"
#include "structalign/neural/model.hpp"

namespace structalign::neural {

struct TrainingExample {
  std::vector<float> input;   // S x S, row-major
  std::vector<float> target;  // kTargetSize
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // inference-mode loss over the training split
  double batch_loss = 0.0;  // mean training-mode mini-batch loss during the epoch
  double val_loss = 0.0;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 5;  // epochs without validation improvement; <= 0 disables
  std::uint64_t seed = 42;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelCheckpoint checkpoint;  // best validation loss seen, epoch 0 = initialization
  std::vector<EpochRecord> history;
  bool stopped_early = false;
};

// Trains `model` in place and leaves it holding the best weights.
TrainResult train(DilatedCnn<float>& model, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set, const TrainConfig& config);

// Mean L2 loss in inference mode.
double evaluate_loss(const DilatedCnn<float>& model, std::span<const TrainingExample> examples,
                     int batch_size = 64);

// "epoch,train_loss,val_loss" with one row per record.
std::string training_log_csv(std::span<const EpochRecord> history);

}  // namespace structalign::neural
