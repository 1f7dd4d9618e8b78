#pragma once

// Synthetic performances with repeats and skips, rendered from score feature
// sequences together with their exact ground truth.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "structalign/align.hpp"
#include "structalign/features.hpp"
#include "structalign/inflection.hpp"
#include "structalign/ingest.hpp"
#include "structalign/simgrid.hpp"

namespace structalign {

// Inclusive score frame range played at tempo_factor (2.0 = twice as fast).
struct Segment {
  int score_start = 0;
  int score_end = 0;
  double tempo_factor = 1.0;

  int length() const { return score_end - score_start + 1; }
  // Performance frames this segment renders to.
  int rendered_length() const;
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Performance frame -> score frame, plus the performance frames where a new
// synchronous pass begins (always including 0).
struct WarpMap {
  std::vector<int> score_frames;
  std::vector<int> pass_starts;

  int size() const { return static_cast<int>(score_frames.size()); }
};

class StructurePlan {
 public:
  StructurePlan() = default;
  // Validates ranges against score_length and merges contiguous segments of
  // equal tempo.
  StructurePlan(int score_length, std::vector<Segment> segments);
  static StructurePlan identity(int score_length);

  int score_length() const { return score_length_; }
  const std::vector<Segment>& segments() const { return segments_; }
  // Number of places where consecutive segments are not contiguous in the
  // score.
  int discontinuities() const;
  int performance_length() const;

  // For every discontinuity: (last performance frame of the segment, its
  // score end), then (first performance frame of the next segment, its score
  // start).
  InflectionPointList inflection_points() const;
  WarpMap warp_map() const;
  // "start-end@tempo" per segment, ';'-separated.
  std::string describe() const;

  friend bool operator==(const StructurePlan&, const StructurePlan&) = default;

 private:
  int score_length_ = 0;
  std::vector<Segment> segments_;
};

struct PlanConfig {
  int num_repeats = 1;           // backward jumps
  double jump_prob = 0.0;        // chance of an extra forward skip per repeat
  double tempo_min = 0.8;
  double tempo_max = 1.2;
  int min_segment_frames = 40;
  double max_jump_fraction = 0.5;  // bound on repeated / skipped span, relative to the score
};

// Seeded random plan. num_repeats = 0 and jump_prob = 0 give the identity
// plan. Throws TooShortError when score_length < 2 * min_segment_frames and
// ArgumentError when the requested structure cannot be placed.
StructurePlan sample_plan(int score_length, std::uint64_t seed, const PlanConfig& config);

struct RenderedPerformance {
  FeatureSequence performance;
  WarpMap warp;
  InflectionPointList inflection_points;
};

// Concatenates the resampled segments, then adds N(0, noise_std) per entry,
// clamps at zero and renormalizes each frame. noise_std = 0 copies frames
// exactly.
RenderedPerformance render_performance(const FeatureSequence& score, const StructurePlan& plan,
                                       double noise_std, std::uint64_t seed);

// Path view of a warp map: pass starts become jump cells, everything else
// diag/up. Intended for score lookups, not as a DP result.
AlignmentPath warp_to_path(const WarpMap& warp);

struct PieceConfig {
  int min_beats = 24;
  int max_beats = 32;
  double min_bpm = 110.0;
  double max_bpm = 150.0;
  double accompaniment_prob = 0.7;  // chance of a bass tone under each half bar
};

// Random diatonic melody with optional bass, as a MIDI score.
MidiScore generate_piece(std::uint64_t seed, const PieceConfig& config = {});
// Symbolic chroma of a score at the given frame rate.
FeatureSequence score_features(const MidiScore& score, double frame_rate_hz = kDefaultFrameRate);

enum class Split { train, validation };
const char* split_name(Split split);

struct DatasetConfig {
  int variants_per_piece = 5;  // variant 0 is the unaltered performance
  std::uint64_t seed = 42;
  double noise_std = 0.05;
  int input_size = kDefaultInputSize;
  double validation_fraction = 0.1;
  PlanConfig plan;  // num_repeats is overridden per variant
};

struct DatasetSample {
  int piece = 0;
  int variant = 0;
  Split split = Split::train;
  StructurePlan plan;
  RenderedPerformance rendered;
  NetworkInputGrid grid;
  std::vector<float> target;
};

// Variant v >= 1 gets 1 + (v - 1) / 2 backward jumps. Pieces (not samples)
// are split between training and validation.
std::vector<DatasetSample> build_dataset(const std::vector<FeatureSequence>& scores,
                                         const DatasetConfig& config);

// Per-sample seed derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace structalign
