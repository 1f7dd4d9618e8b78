#include "structalign/structgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "structalign/error.hpp"
#include "structalign/neural/targets.hpp"
#include "structalign/random.hpp"

namespace structalign {

namespace {

constexpr int kMaxDiscontinuities = kMaxInflectionPoints / 2;

bool contiguous(const Segment& a, const Segment& b) { return b.score_start == a.score_end + 1; }

}  // namespace

int Segment::rendered_length() const {
  // At least two frames so both endpoints are played.
  return std::max(2, static_cast<int>(std::lround(length() / tempo_factor)));
}

StructurePlan::StructurePlan(int score_length, std::vector<Segment> segments)
    : score_length_(score_length) {
  if (score_length < 2) throw ArgumentError("score must have at least 2 frames");
  if (segments.empty()) throw ArgumentError("plan needs at least one segment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.score_start < 0 || s.score_end >= score_length || s.score_start >= s.score_end) {
      throw ArgumentError("segment " + std::to_string(i) + " [" + std::to_string(s.score_start) +
                          ", " + std::to_string(s.score_end) + "] is not a valid range in a " +
                          std::to_string(score_length) + "-frame score");
    }
    if (!(s.tempo_factor > 0.0) || !std::isfinite(s.tempo_factor)) {
      throw ArgumentError("segment " + std::to_string(i) + " has a non-positive tempo factor");
    }
  }
  for (const auto& s : segments) {
    if (!segments_.empty() && contiguous(segments_.back(), s) &&
        segments_.back().tempo_factor == s.tempo_factor) {
      segments_.back().score_end = s.score_end;
    } else {
      segments_.push_back(s);
    }
  }
}

StructurePlan StructurePlan::identity(int score_length) {
  return StructurePlan(score_length, {Segment{0, score_length - 1, 1.0}});
}

int StructurePlan::discontinuities() const {
  int count = 0;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (!contiguous(segments_[i - 1], segments_[i])) ++count;
  }
  return count;
}

int StructurePlan::performance_length() const {
  int total = 0;
  for (const auto& s : segments_) total += s.rendered_length();
  return total;
}

InflectionPointList StructurePlan::inflection_points() const {
  InflectionPointList points;
  int perf = 0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    perf += segments_[i].rendered_length();
    if (i + 1 < segments_.size() && !contiguous(segments_[i], segments_[i + 1])) {
      points.push_back({perf - 1, segments_[i].score_end});
      points.push_back({perf, segments_[i + 1].score_start});
    }
  }
  return points;
}

WarpMap StructurePlan::warp_map() const {
  WarpMap warp;
  warp.score_frames.reserve(static_cast<std::size_t>(performance_length()));
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (i == 0 || !contiguous(segments_[i - 1], s)) warp.pass_starts.push_back(warp.size());
    const long count = s.rendered_length();
    const long span = s.length() - 1;
    for (long j = 0; j < count; ++j) {
      // round(j * span / (count - 1)), halves rounded up, in integers.
      const long offset = (2 * j * span + (count - 1)) / (2 * (count - 1));
      warp.score_frames.push_back(s.score_start + static_cast<int>(offset));
    }
  }
  return warp;
}

std::string StructurePlan::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out << ';';
    out << segments_[i].score_start << '-' << segments_[i].score_end << '@'
        << segments_[i].tempo_factor;
  }
  return out.str();
}

StructurePlan sample_plan(int score_length, std::uint64_t seed, const PlanConfig& config) {
  const int min_seg = config.min_segment_frames;
  if (min_seg < 2) throw ArgumentError("min_segment_frames must be at least 2");
  if (score_length < 2 * min_seg) {
    throw TooShortError("score of " + std::to_string(score_length) +
                        " frames is shorter than twice the minimum segment (" +
                        std::to_string(min_seg) + ")");
  }
  if (config.num_repeats < 0 || config.num_repeats > kMaxDiscontinuities) {
    throw ArgumentError("num_repeats must be in [0, " + std::to_string(kMaxDiscontinuities) + "]");
  }
  if (!(config.jump_prob >= 0.0 && config.jump_prob <= 1.0)) {
    throw ArgumentError("jump_prob must be in [0, 1]");
  }
  if (!(config.tempo_min > 0.0 && config.tempo_min <= config.tempo_max) ||
      !std::isfinite(config.tempo_max)) {
    throw ArgumentError("tempo range must satisfy 0 < min <= max");
  }
  if (!(config.max_jump_fraction > 0.0 && config.max_jump_fraction <= 1.0)) {
    throw ArgumentError("max_jump_fraction must be in (0, 1]");
  }

  Rng rng(seed);
  int skips = 0;
  if (config.jump_prob > 0.0) {
    for (int i = 0; i < std::max(1, config.num_repeats); ++i) {
      if (uniform01(rng) < config.jump_prob) ++skips;
    }
  }
  skips = std::min(skips, kMaxDiscontinuities - config.num_repeats);
  if (config.num_repeats == 0 && skips == 0) return StructurePlan::identity(score_length);

  const int max_span =
      std::max(min_seg, static_cast<int>(std::floor(config.max_jump_fraction * score_length)));
  struct Event {
    int source;  // last score frame before the jump
    int target;  // first score frame after it
  };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<Event> events;
    bool ok = true;
    for (int r = 0; r < config.num_repeats && ok; ++r) {
      const int span = uniform_int(rng, min_seg, max_span);
      if (span > score_length) {
        ok = false;
        break;
      }
      const int source = uniform_int(rng, span - 1, score_length - 1);
      events.push_back({source, source - span + 1});
    }
    for (int k = 0; k < skips && ok; ++k) {
      const int gap = uniform_int(rng, min_seg, max_span);
      const int hi = score_length - 1 - gap - min_seg;
      if (hi < min_seg - 1) {
        ok = false;
        break;
      }
      const int source = uniform_int(rng, min_seg - 1, hi);
      events.push_back({source, source + gap + 1});
    }
    if (!ok) continue;
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.source < b.source; });

    std::vector<Segment> segments;
    int start = 0;
    for (std::size_t i = 0; i < events.size() && ok; ++i) {
      if (i > 0 && events[i].source == events[i - 1].source) ok = false;
      if (events[i].source - start + 1 < min_seg) ok = false;
      segments.push_back({start, events[i].source, 1.0});
      start = events[i].target;
    }
    if (!ok || score_length - start < min_seg) continue;
    segments.push_back({start, score_length - 1, 1.0});
    for (auto& s : segments) s.tempo_factor = uniform_real(rng, config.tempo_min, config.tempo_max);
    return StructurePlan(score_length, std::move(segments));
  }
  throw ArgumentError("could not place " + std::to_string(config.num_repeats) + " repeats and " +
                      std::to_string(skips) + " skips in a " + std::to_string(score_length) +
                      "-frame score");
}

RenderedPerformance render_performance(const FeatureSequence& score, const StructurePlan& plan,
                                       double noise_std, std::uint64_t seed) {
  if (score.num_frames() != plan.score_length()) {
    throw ArgumentError("plan expects " + std::to_string(plan.score_length()) +
                        " score frames, sequence has " + std::to_string(score.num_frames()));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ArgumentError("noise_std must be finite and >= 0");
  }
  RenderedPerformance out;
  out.warp = plan.warp_map();
  out.inflection_points = plan.inflection_points();
  out.performance.frame_rate_hz = score.frame_rate_hz;
  out.performance.source_kind = score.source_kind;
  RowMatrix& v = out.performance.vectors;
  v.resize(out.warp.size(), score.dims());
  for (int m = 0; m < out.warp.size(); ++m) v.row(m) = score.vectors.row(out.warp.score_frames[m]);
  if (noise_std > 0.0) {
    Rng rng(seed);
    double* data = v.data();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      data[i] = std::max(0.0, data[i] + noise_std * standard_normal(rng));
    }
    normalize_frames(v);
  }
  return out;
}

AlignmentPath warp_to_path(const WarpMap& warp) {
  AlignmentPath path;
  std::size_t next_pass = 1;
  for (int m = 0; m < warp.size(); ++m) {
    Move move = Move::start;
    if (m > 0) {
      if (next_pass < warp.pass_starts.size() && warp.pass_starts[next_pass] == m) {
        move = Move::jump;
        ++next_pass;
        path.jump_positions.push_back(path.cells.size());
      } else {
        move = warp.score_frames[m] == warp.score_frames[m - 1] ? Move::up : Move::diag;
      }
    }
    path.cells.push_back({m, warp.score_frames[m], move});
  }
  return path;
}

MidiScore generate_piece(std::uint64_t seed, const PieceConfig& config) {
  if (config.min_beats < 1 || config.max_beats < config.min_beats) {
    throw ArgumentError("bad beat range");
  }
  if (!(config.min_bpm > 0.0 && config.min_bpm <= config.max_bpm)) {
    throw ArgumentError("bad tempo range");
  }
  static constexpr int kMajor[7] = {0, 2, 4, 5, 7, 9, 11};
  Rng rng(seed);
  const int beats = uniform_int(rng, config.min_beats, config.max_beats);
  const double bpm = uniform_real(rng, config.min_bpm, config.max_bpm);
  const int tonic = uniform_int(rng, 0, 11);
  const double beat_seconds = 60.0 / bpm;

  MidiScore score;
  score.ticks_per_quarter = 480;
  score.tempo_map = {{0, static_cast<std::uint32_t>(std::lround(60e6 / bpm))}};
  score.num_tracks = 2;

  auto pitch_of = [&](int degree, int octave) {
    const int oct = degree >= 0 ? degree / 7 : (degree - 6) / 7;
    const int step = degree - 7 * oct;
    return 12 * (octave + oct) + tonic + kMajor[step];
  };

  // Melody: diatonic random walk over two octaves, eighths to half notes.
  static constexpr double kDurations[5] = {0.5, 0.5, 1.0, 1.0, 2.0};
  int degree = uniform_int(rng, 0, 13);
  double t = 0.0;
  while (t < beats) {
    const double dur = std::min(kDurations[uniform_int(rng, 0, 4)], beats - t);
    const int pitch = pitch_of(degree, 5);
    score.notes.push_back({t * beat_seconds, dur * beat_seconds, pitch, uniform_int(rng, 70, 110),
                           0, 0});
    t += dur;
    degree = std::clamp(degree + uniform_int(rng, -3, 3), 0, 13);
  }
  // Bass: chord roots (I, IV, V, vi) per half bar.
  static constexpr int kRoots[4] = {0, 3, 4, 5};
  for (int b = 0; b < beats; b += 2) {
    if (uniform01(rng) >= config.accompaniment_prob) continue;
    const double dur = std::min(2, beats - b);
    score.notes.push_back({b * beat_seconds, dur * beat_seconds,
                           pitch_of(kRoots[uniform_int(rng, 0, 3)], 3), uniform_int(rng, 60, 90),
                           1, 1});
  }
  finalize_score(score);
  return score;
}

FeatureSequence score_features(const MidiScore& score, double frame_rate_hz) {
  return chroma_from_piano_roll(midi_to_piano_roll(score, frame_rate_hz));
}

const char* split_name(Split split) { return split == Split::train ? "train" : "validation"; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(base ^ splitmix64(a + 1)) ^ splitmix64(b + 0x5851f42d4c957f2dULL));
}

std::vector<DatasetSample> build_dataset(const std::vector<FeatureSequence>& scores,
                                         const DatasetConfig& config) {
  if (scores.empty()) throw ArgumentError("no scores to build a dataset from");
  if (config.variants_per_piece < 1) throw ArgumentError("variants_per_piece must be >= 1");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw ArgumentError("validation_fraction must be in [0, 1)");
  }
  const int pieces = static_cast<int>(scores.size());

  std::vector<Split> split(scores.size(), Split::train);
  if (pieces >= 2 && config.validation_fraction > 0.0) {
    const int n_val = std::clamp(
        static_cast<int>(std::lround(config.validation_fraction * pieces)), 1, pieces - 1);
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, 0x73706c6974ULL));
    for (int i = pieces - 1; i > 0; --i) std::swap(order[i], order[uniform_int(rng, 0, i)]);
    for (int i = 0; i < n_val; ++i) split[order[i]] = Split::validation;
  }

  std::vector<DatasetSample> samples;
  samples.reserve(scores.size() * config.variants_per_piece);
  for (int p = 0; p < pieces; ++p) {
    const FeatureSequence& score = scores[p];
    const int len = static_cast<int>(score.num_frames());
    for (int v = 0; v < config.variants_per_piece; ++v) {
      const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(p) + 1,
                                             static_cast<std::uint64_t>(v));
      DatasetSample s;
      s.piece = p;
      s.variant = v;
      s.split = split[p];
      if (v == 0) {
        s.plan = StructurePlan::identity(len);
      } else {
        PlanConfig pc = config.plan;
        pc.num_repeats = 1 + (v - 1) / 2;
        s.plan = sample_plan(len, seed, pc);
      }
      s.rendered = render_performance(score, s.plan, config.noise_std, splitmix64(seed));
      const CrossSimilarityMatrix csm = cross_similarity(s.rendered.performance, score);
      s.grid = to_network_input(csm, config.input_size);
      s.target = neural::encode_targets(s.rendered.inflection_points,
                                        static_cast<int>(csm.rows()), static_cast<int>(csm.cols()));
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

}  // namespace structalign
