#include "structalign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "structalign/error.hpp"

namespace structalign {

namespace {

void check_rates(double performance_rate, double score_rate) {
  if (!(performance_rate > 0.0) || !(score_rate > 0.0) || !std::isfinite(performance_rate) ||
      !std::isfinite(score_rate)) {
    throw ArgumentError("frame rates must be positive and finite");
  }
}

std::string threshold_label(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ms);
  return buf;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void fill_percent(AccuracyReport& r) {
  r.accuracy_percent.assign(r.thresholds_ms.size(), 0.0);
  for (std::size_t k = 0; k < r.thresholds_ms.size(); ++k) {
    r.accuracy_percent[k] =
        r.total_beats ? 100.0 * static_cast<double>(r.correct[k]) / r.total_beats : 0.0;
  }
}

}  // namespace

int beat_frame(double score_seconds, double score_rate) {
  return static_cast<int>(std::lround(score_seconds * score_rate));
}

BeatAnnotation beats_from_warpmap(const WarpMap& warp, const std::vector<double>& score_beats,
                                  double performance_rate, double score_rate) {
  check_rates(performance_rate, score_rate);
  BeatAnnotation out;
  if (warp.size() == 0 || score_beats.empty()) return out;
  const ScoreLookup lookup(warp_to_path(warp));

  // Score ranges actually played by each pass.
  std::vector<std::pair<int, int>> ranges;
  for (std::size_t i = 0; i < warp.pass_starts.size(); ++i) {
    const int begin = warp.pass_starts[i];
    const int end = i + 1 < warp.pass_starts.size() ? warp.pass_starts[i + 1] : warp.size();
    if (begin < end) ranges.emplace_back(warp.score_frames[begin], warp.score_frames[end - 1]);
  }
  const int max_score = *std::max_element(warp.score_frames.begin(), warp.score_frames.end());

  std::vector<double> beats = score_beats;
  std::sort(beats.begin(), beats.end());
  for (double beat : beats) {
    if (!std::isfinite(beat) || beat < 0.0) throw ArgumentError("beat times must be finite and >= 0");
    const int n = beat_frame(beat, score_rate);
    if (n > max_score) continue;
    bool played = false;
    for (const auto& [lo, hi] : ranges) played = played || (n >= lo && n <= hi);
    const auto frames = lookup.occurrences(n);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      out.pairs.push_back({beat, frames[k] / performance_rate, static_cast<int>(k), !played});
    }
  }
  return out;
}

void AccuracyReport::check() const {
  if (accuracy_percent.size() != thresholds_ms.size()) throw Error("report size mismatch");
  for (std::size_t k = 0; k < accuracy_percent.size(); ++k) {
    if (!(accuracy_percent[k] >= 0.0 && accuracy_percent[k] <= 100.0)) {
      throw Error("accuracy out of [0, 100]");
    }
    if (k > 0 && thresholds_ms[k] >= thresholds_ms[k - 1] &&
        accuracy_percent[k] < accuracy_percent[k - 1]) {
      throw Error("accuracy decreases with a larger threshold");
    }
  }
}

AccuracyReport accuracy(const AlignmentPath& path, const BeatAnnotation& truth,
                        double performance_rate, double score_rate,
                        const std::vector<double>& thresholds_ms, const std::string& engine,
                        const std::string& piece) {
  check_rates(performance_rate, score_rate);
  if (truth.empty()) throw ArgumentError("beat annotation is empty");
  if (thresholds_ms.empty()) throw ArgumentError("no thresholds given");
  for (double t : thresholds_ms) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ArgumentError("thresholds must be finite and >= 0");
  }
  const ScoreLookup lookup(path);
  AccuracyReport r;
  r.engine = engine;
  r.thresholds_ms = thresholds_ms;
  r.total_beats = truth.size();
  r.correct.assign(thresholds_ms.size(), 0);
  for (const auto& pair : truth.pairs) {
    const int n = beat_frame(pair.score_seconds, score_rate);
    const int m = lookup.performance_frame(n, static_cast<std::size_t>(pair.occurrence));
    const double error_ms = 1000.0 * std::abs(m / performance_rate - pair.performance_seconds);
    for (std::size_t k = 0; k < thresholds_ms.size(); ++k) {
      // Tolerance absorbs the rounding of frame-to-second conversions.
      if (error_ms <= thresholds_ms[k] + 1e-9) ++r.correct[k];
    }
  }
  fill_percent(r);
  r.pieces.push_back({piece, r.total_beats, r.correct});
  return r;
}

AccuracyReport pool_reports(const std::vector<AccuracyReport>& reports) {
  if (reports.empty()) throw ArgumentError("nothing to pool");
  AccuracyReport pooled;
  pooled.engine = reports.front().engine;
  pooled.thresholds_ms = reports.front().thresholds_ms;
  pooled.correct.assign(pooled.thresholds_ms.size(), 0);
  for (const auto& r : reports) {
    if (r.thresholds_ms != pooled.thresholds_ms) throw ArgumentError("threshold sets differ");
    if (r.engine != pooled.engine) throw ArgumentError("cannot pool different engines");
    pooled.total_beats += r.total_beats;
    for (std::size_t k = 0; k < r.correct.size(); ++k) pooled.correct[k] += r.correct[k];
    pooled.pieces.insert(pooled.pieces.end(), r.pieces.begin(), r.pieces.end());
  }
  fill_percent(pooled);
  return pooled;
}

std::vector<AccuracyReport> compare_engines(const CrossSimilarityMatrix& csm,
                                            const InflectionPointList& points,
                                            const BeatAnnotation& truth,
                                            const EngineParams& params) {
  const double pr = csm.performance_frame_rate_hz;
  const double sr = csm.score_frame_rate_hz;
  std::vector<AccuracyReport> out;
  out.push_back(accuracy(dtw(csm), truth, pr, sr, params.thresholds_ms, "dtw", params.piece));
  out.push_back(accuracy(jump_dtw(csm, points, params.jump), truth, pr, sr, params.thresholds_ms,
                         "jumpdtw", params.piece));
  out.push_back(accuracy(nwtw_align(csm, params.nwtw), truth, pr, sr, params.thresholds_ms,
                         "nwtw", params.piece));
  std::stable_sort(out.begin(), out.end(),
                   [](const AccuracyReport& a, const AccuracyReport& b) { return a.engine < b.engine; });
  return out;
}

std::string format_table(const std::vector<AccuracyReport>& reports) {
  if (reports.empty()) return {};
  std::size_t name_width = 6;
  for (const auto& r : reports) name_width = std::max(name_width, r.engine.size());
  const auto& thresholds = reports.front().thresholds_ms;
  std::vector<std::string> headers;
  for (double t : thresholds) headers.push_back("<" + threshold_label(t) + "ms");

  auto pad = [](std::string s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  std::string out = pad("engine", name_width, false);
  for (const auto& h : headers) out += "  " + pad(h, std::max<std::size_t>(h.size(), 7), true);
  out += "  " + pad("beats", 7, true) + '\n';
  for (const auto& r : reports) {
    out += pad(r.engine, name_width, false);
    for (std::size_t k = 0; k < headers.size(); ++k) {
      const double v = k < r.accuracy_percent.size() ? r.accuracy_percent[k] : 0.0;
      out += "  " + pad(percent(v), std::max<std::size_t>(headers[k].size(), 7), true);
    }
    out += "  " + pad(std::to_string(r.total_beats), 7, true) + '\n';
  }
  return out;
}

std::string reports_to_csv(const std::vector<AccuracyReport>& reports) {
  if (reports.empty()) return {};
  std::string out = "engine,piece,beats";
  for (double t : reports.front().thresholds_ms) out += ",acc_" + threshold_label(t) + "ms";
  out += '\n';
  for (const auto& r : reports) {
    for (const auto& p : r.pieces) {
      out += r.engine + ',' + p.piece + ',' + std::to_string(p.beats);
      for (std::size_t k = 0; k < p.correct.size(); ++k) {
        out += ',' + percent(p.beats ? 100.0 * p.correct[k] / p.beats : 0.0);
      }
      out += '\n';
    }
    out += r.engine + ",all," + std::to_string(r.total_beats);
    for (double v : r.accuracy_percent) out += ',' + percent(v);
    out += '\n';
  }
  return out;
}

}  // namespace structalign
