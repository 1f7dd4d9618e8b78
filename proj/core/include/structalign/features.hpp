#pragma once

// 12-dimensional chroma feature sequences.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "structalign/ingest.hpp"
#include "structalign/matrix.hpp"

namespace structalign {

inline constexpr int kChromaDims = 12;

enum class SourceKind { symbolic, audio };

struct FeatureSequence {
  RowMatrix vectors;  // [num_frames x 12]
  double frame_rate_hz = kDefaultFrameRate;
  SourceKind source_kind = SourceKind::symbolic;

  Eigen::Index num_frames() const { return vectors.rows(); }
  Eigen::Index dims() const { return vectors.cols(); }
};

// Scales each row to unit Euclidean norm; all-zero rows stay zero.
void normalize_frames(RowMatrix& frames);

FeatureSequence chroma_from_piano_roll(const PianoRoll& roll);

struct StftParams {
  int window = 2048;
  int hop = 512;
};

// Hann-windowed magnitude STFT folded onto pitch classes by nearest
// equal-tempered semitone (A4 = 440 Hz). Bins outside [27.5, 4186] Hz are
// ignored. Throws TooShortError when the clip is shorter than one window.
FeatureSequence chroma_from_audio(const AudioClip& clip, const StftParams& params = {});

// Pitch class (0 = C) of the semitone nearest to `hz`, or -1 when the
// frequency falls outside the chroma band.
int pitch_class_of_frequency(double hz);

// FSEQ1: "FSEQ1", u32 frames, u32 dims, f64 frame rate, row-major f32.
std::vector<std::uint8_t> encode_fseq(const FeatureSequence& seq);
FeatureSequence decode_fseq(std::span<const std::uint8_t> bytes);
void write_fseq(const std::filesystem::path& path, const FeatureSequence& seq);
FeatureSequence read_fseq(const std::filesystem::path& path);

// One frame per line, comma-separated.
std::string features_to_csv(const FeatureSequence& seq);

}  // namespace structalign
