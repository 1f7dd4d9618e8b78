#pragma once

// DCNN1 checkpoints:
//   "DCNN1" | u32 text length | key=value lines | u32 parameter count |
//   tensors | u32 buffer count | tensors
// where a tensor is u32 name length, name, u32 rank, u32 dims, f32 data.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "structalign/neural/model.hpp"

namespace structalign::neural {

inline constexpr int kCheckpointVersion = 1;

struct ModelCheckpoint {
  ModelConfig config;
  TensorList<float> parameters;
  TensorList<float> buffers;
  int epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();

  static ModelCheckpoint from_model(const DilatedCnn<float>& model, int epoch = 0,
                                    double best_validation_loss =
                                        std::numeric_limits<double>::infinity());
  DilatedCnn<float> to_model() const;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& checkpoint);
ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace structalign::neural
