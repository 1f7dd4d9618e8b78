#pragma once

// Subcommands of the structalign tool. Each cmd_* returns a process exit
// code: 0 success, 1 runtime failure, 2 usage error. Diagnostics go to `log`,
// data only to the declared output paths.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace structalign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct GenOptions {
  std::filesystem::path out_dir;
  int pieces = 50;
  int variants = 5;
  std::uint64_t seed = 42;
  double noise = 0.05;
  double jump_prob = 0.5;
  int min_segment_frames = 40;
};

struct ModelOptions {
  int input_size = 128;
  std::array<int, 2> dilations{2, 3};
  std::array<int, 3> channels{16, 32, 64};
  std::array<int, 2> fc_sizes{4096, 1024};
};

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  ModelOptions model;
  int epochs = 40;
  int batch_size = 64;
  double learning_rate = 1e-4;
  int patience = 5;
  std::uint64_t seed = 42;
};

struct PredictOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path score;
  std::filesystem::path performance;
  std::filesystem::path out_dir;
};

struct AlignOptions {
  std::filesystem::path score;
  std::filesystem::path performance;
  std::string engine = "dtw";
  std::optional<std::filesystem::path> points;
  double gamma = 0.5;
  std::filesystem::path out_dir;
};

struct EvalOptions {
  // Corpus mode.
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> checkpoint;  // model points for jumpdtw
  std::string split = "validation";
  bool structured_only = false;
  // Single-path mode.
  std::optional<std::filesystem::path> path;
  std::optional<std::filesystem::path> truth;
  std::string engine = "path";

  std::vector<double> thresholds_ms{25.0, 50.0, 100.0, 200.0};
  double gamma = 0.5;
  std::filesystem::path out_dir;
};

int cmd_gen(const GenOptions& options, std::ostream& log);
int cmd_train(const TrainOptions& options, std::ostream& log);
int cmd_predict(const PredictOptions& options, std::ostream& log);
int cmd_align(const AlignOptions& options, std::ostream& log);
int cmd_eval(const EvalOptions& options, std::ostream& log);

// Parses argv and dispatches.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace structalign::cli
