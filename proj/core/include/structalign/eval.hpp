#pragma once

// Beat-level alignment accuracy and engine comparison tables.

#include <string>
#include <vector>

#include "structalign/align.hpp"
#include "structalign/structgen.hpp"

namespace structalign {

struct BeatPair {
  double score_seconds = 0.0;
  double performance_seconds = 0.0;
  int occurrence = 0;    // 0 for the first pass over this beat, 1 for a repeat, ...
  bool skipped = false;  // beat lies in a region the performance jumped over
};

// Pairs ordered by score time, then occurrence.
struct BeatAnnotation {
  std::vector<BeatPair> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
};

inline const std::vector<double> kDefaultThresholdsMs{25.0, 50.0, 100.0, 200.0};

// Score frame of a beat: round(seconds * rate).
int beat_frame(double score_seconds, double score_rate);

// Maps each score beat through the warp map, once per performance pass that
// plays it. Beats outside the score are ignored.
BeatAnnotation beats_from_warpmap(const WarpMap& warp, const std::vector<double>& score_beats,
                                  double performance_rate, double score_rate);

struct PieceAccuracy {
  std::string piece;
  std::size_t beats = 0;
  std::vector<std::size_t> correct;  // per threshold
};

struct AccuracyReport {
  std::string engine;
  std::vector<double> thresholds_ms;
  std::vector<double> accuracy_percent;
  std::size_t total_beats = 0;
  std::vector<std::size_t> correct;
  std::vector<PieceAccuracy> pieces;

  // Throws if accuracies are out of range or decrease with the threshold.
  void check() const;
};

// A pair counts as correct at threshold t when the path's performance time
// for its score beat (occurrence-matched, see ScoreLookup) is within t ms.
AccuracyReport accuracy(const AlignmentPath& path, const BeatAnnotation& truth,
                        double performance_rate, double score_rate,
                        const std::vector<double>& thresholds_ms = kDefaultThresholdsMs,
                        const std::string& engine = "", const std::string& piece = "");

// Sums beat counts over reports of one engine into a pooled report; the
// per-piece rows are concatenated.
AccuracyReport pool_reports(const std::vector<AccuracyReport>& reports);

struct EngineParams {
  NwtwParams nwtw;
  JumpOptions jump;
  std::vector<double> thresholds_ms = kDefaultThresholdsMs;
  std::string piece;
};

// Runs dtw, jumpdtw (with `points`) and nwtw; rows sorted by engine name.
std::vector<AccuracyReport> compare_engines(const CrossSimilarityMatrix& csm,
                                            const InflectionPointList& points,
                                            const BeatAnnotation& truth,
                                            const EngineParams& params);

// Aligned text table, one row per report, columns "<25ms" ... .
std::string format_table(const std::vector<AccuracyReport>& reports);
// engine,piece,beats,acc_25ms,... with a pooled row per engine (piece "all").
std::string reports_to_csv(const std::vector<AccuracyReport>& reports);

}  // namespace structalign
