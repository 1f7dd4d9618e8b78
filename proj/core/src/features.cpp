#include "structalign/features.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"

namespace structalign {
namespace {

constexpr double kMinChromaHz = 27.5;
constexpr double kMaxChromaHz = 4186.0;

}  // namespace

void normalize_frames(RowMatrix& frames) {
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    const double norm = frames.row(r).norm();
    if (norm > 0.0) frames.row(r) /= norm;
  }
}

FeatureSequence chroma_from_piano_roll(const PianoRoll& roll) {
  if (roll.frames.cols() != 128) throw ArgumentError("piano roll must have 128 pitch rows");
  if (!(roll.frame_rate_hz > 0.0)) throw ArgumentError("piano roll frame rate must be positive");
  FeatureSequence seq;
  seq.frame_rate_hz = roll.frame_rate_hz;
  seq.source_kind = SourceKind::symbolic;
  seq.vectors = RowMatrix::Zero(roll.frames.rows(), kChromaDims);
  for (Eigen::Index f = 0; f < roll.frames.rows(); ++f) {
    for (int k = 0; k < 128; ++k) {
      seq.vectors(f, k % kChromaDims) += roll.frames(f, k);
    }
  }
  normalize_frames(seq.vectors);
  return seq;
}

int pitch_class_of_frequency(double hz) {
  if (!(hz >= kMinChromaHz) || hz > kMaxChromaHz) return -1;
  const long midi = std::lround(69.0 + 12.0 * std::log2(hz / 440.0));
  return static_cast<int>(((midi % 12) + 12) % 12);
}

FeatureSequence chroma_from_audio(const AudioClip& clip, const StftParams& params) {
  const int window = params.window;
  const int hop = params.hop;
  if (window <= 0 || (window & (window - 1)) != 0) {
    throw ArgumentError("STFT window must be a power of two");
  }
  if (hop <= 0 || hop > window) throw ArgumentError("STFT hop must be in (0, window]");
  if (clip.sample_rate_hz <= 0) throw ArgumentError("sample rate must be positive");
  const auto len = static_cast<long>(clip.samples.size());
  if (len < window) {
    throw TooShortError("clip has " + std::to_string(len) + " samples, window needs " +
                        std::to_string(window));
  }

  const long num_frames = 1 + (len - window) / hop;
  std::vector<double> hann(window);
  for (int i = 0; i < window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window);
  }
  const int bins = window / 2 + 1;
  std::vector<int> bin_class(bins);
  for (int k = 0; k < bins; ++k) {
    bin_class[k] = pitch_class_of_frequency(static_cast<double>(k) * clip.sample_rate_hz / window);
  }

  FeatureSequence seq;
  seq.source_kind = SourceKind::audio;
  seq.frame_rate_hz = static_cast<double>(clip.sample_rate_hz) / hop;
  seq.vectors = RowMatrix::Zero(num_frames, kChromaDims);

  Eigen::FFT<double> fft;
  std::vector<double> frame(window);
  std::vector<std::complex<double>> spectrum;
  for (long f = 0; f < num_frames; ++f) {
    const long start = f * hop;
    for (int i = 0; i < window; ++i) frame[i] = clip.samples[start + i] * hann[i];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < bins; ++k) {
      if (bin_class[k] >= 0) seq.vectors(f, bin_class[k]) += std::norm(spectrum[k]);
    }
  }
  normalize_frames(seq.vectors);
  return seq;
}

std::vector<std::uint8_t> encode_fseq(const FeatureSequence& seq) {
  io::ByteWriter w;
  w.text("FSEQ1");
  w.u32(static_cast<std::uint32_t>(seq.vectors.rows()));
  w.u32(static_cast<std::uint32_t>(seq.vectors.cols()));
  w.f64(seq.frame_rate_hz);
  for (Eigen::Index r = 0; r < seq.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < seq.vectors.cols(); ++c) {
      w.f32(static_cast<float>(seq.vectors(r, c)));
    }
  }
  return std::move(w).take();
}

FeatureSequence decode_fseq(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("FSEQ1");
  const std::uint32_t frames = r.u32();
  const std::uint32_t dims = r.u32();
  FeatureSequence seq;
  seq.frame_rate_hz = r.f64();
  if (std::uint64_t{frames} * dims * 4 != r.remaining()) {
    throw ParseError(r.offset(), "FSEQ1 payload size does not match header");
  }
  seq.vectors.resize(frames, dims);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (std::uint32_t j = 0; j < dims; ++j) seq.vectors(i, j) = r.f32();
  }
  return seq;
}

void write_fseq(const std::filesystem::path& path, const FeatureSequence& seq) {
  io::write_file(path, encode_fseq(seq));
}

FeatureSequence read_fseq(const std::filesystem::path& path) {
  return decode_fseq(io::read_file(path));
}

std::string features_to_csv(const FeatureSequence& seq) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < seq.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < seq.vectors.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%s%.9g", c ? "," : "", seq.vectors(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace structalign
