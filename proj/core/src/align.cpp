#include "structalign/align.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"

namespace structalign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_local_costs(const RowMatrix& e) {
  if (e.rows() < 1 || e.cols() < 1) throw ArgumentError("cost matrix is empty");
  if (!e.allFinite()) throw ArgumentError("cost matrix contains non-finite values");
}

std::string point_text(std::size_t i, const InflectionPoint& pt) {
  return "inflection point " + std::to_string(i + 1) + " (" +
         std::to_string(pt.performance_frame) + ", " + std::to_string(pt.score_frame) + ")";
}

struct JumpEdge {
  std::size_t target;
  std::size_t source;
  int pair;
};

std::vector<JumpEdge> jump_edges(const RowMatrix& e, const InflectionPointList& points) {
  if (points.size() % 2 != 0) {
    throw ArgumentError("inflection point count must be even, got " +
                        std::to_string(points.size()));
  }
  const auto rows = static_cast<int>(e.rows());
  const auto cols = static_cast<int>(e.cols());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (pt.performance_frame < 0 || pt.performance_frame >= rows || pt.score_frame < 0 ||
        pt.score_frame >= cols) {
      throw ArgumentError(point_text(i, pt) + " lies outside the " + std::to_string(rows) +
                          "x" + std::to_string(cols) + " matrix");
    }
    if (i > 0 && pt.performance_frame < points[i - 1].performance_frame) {
      throw ArgumentError(point_text(i, pt) + " is not chronological");
    }
  }
  std::vector<JumpEdge> edges;
  for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
    const auto& src = points[k];
    const auto& dst = points[k + 1];
    const std::size_t s = static_cast<std::size_t>(src.performance_frame) * cols + src.score_frame;
    const std::size_t t = static_cast<std::size_t>(dst.performance_frame) * cols + dst.score_frame;
    if (s >= t) {
      throw ArgumentError(point_text(k + 1, dst) + " does not come after its jump source " +
                          point_text(k, src));
    }
    edges.push_back({t, s, static_cast<int>(k / 2)});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const JumpEdge& a, const JumpEdge& b) { return a.target < b.target; });
  return edges;
}

CostMatrix make_cost_matrix(const RowMatrix& e) {
  CostMatrix c;
  c.values.resize(e.rows(), e.cols());
  c.moves.assign(static_cast<std::size_t>(e.size()), Move::start);
  c.jump_edge.assign(static_cast<std::size_t>(e.size()), -1);
  return c;
}

}  // namespace

const char* move_name(Move move) {
  switch (move) {
    case Move::start: return "start";
    case Move::diag: return "diag";
    case Move::up: return "up";
    case Move::left: return "left";
    case Move::jump: return "jump";
    case Move::skip_performance: return "skip_perf";
    case Move::skip_score: return "skip_score";
  }
  return "?";
}

Move parse_move(const std::string& name) {
  for (Move m : {Move::start, Move::diag, Move::up, Move::left, Move::jump,
                 Move::skip_performance, Move::skip_score}) {
    if (name == move_name(m)) return m;
  }
  throw ArgumentError("unknown move tag \"" + name + "\"");
}

CostMatrix jump_dtw_costs(const RowMatrix& e, const InflectionPointList& points,
                          const JumpOptions& options) {
  check_local_costs(e);
  if (!std::isfinite(options.jump_penalty) || options.jump_penalty < 0.0) {
    throw ArgumentError("jump penalty must be finite and >= 0");
  }
  const std::vector<JumpEdge> edges = jump_edges(e, points);
  CostMatrix c = make_cost_matrix(e);
  c.edge_source.resize(points.size() / 2);
  for (const auto& edge : edges) c.edge_source[edge.pair] = edge.source;

  double* d = c.values.data();
  const double* local = e.data();
  const int rows = c.rows();
  const int cols = c.cols();
  std::size_t next_edge = 0;
  for (int m = 0; m < rows; ++m) {
    for (int n = 0; n < cols; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * cols + n;
      if (i == 0) {
        d[0] = local[0];
        continue;
      }
      double best = kInf;
      Move move = Move::start;
      if (m > 0 && n > 0) {
        best = d[i - cols - 1];
        move = Move::diag;
      }
      if (m > 0 && d[i - cols] < best) {
        best = d[i - cols];
        move = Move::up;
      }
      if (n > 0 && d[i - 1] < best) {
        best = d[i - 1];
        move = Move::left;
      }
      while (next_edge < edges.size() && edges[next_edge].target == i) {
        const double via = d[edges[next_edge].source] + options.jump_penalty;
        if (via < best) {
          best = via;
          move = Move::jump;
          c.jump_edge[i] = edges[next_edge].pair;
        }
        ++next_edge;
      }
      c.moves[i] = move;
      d[i] = best + local[i];
    }
  }
  return c;
}

CostMatrix dtw_costs(const RowMatrix& e) { return jump_dtw_costs(e, {}); }

CostMatrix nwtw_costs(const RowMatrix& e, const NwtwParams& params) {
  check_local_costs(e);
  if (!std::isfinite(params.gamma) || params.gamma < 0.0) {
    throw ArgumentError("gap penalty must be finite and >= 0");
  }
  CostMatrix c = make_cost_matrix(e);
  double* d = c.values.data();
  const double* local = e.data();
  const double gamma = params.gamma;
  const int rows = c.rows();
  const int cols = c.cols();
  for (int m = 0; m < rows; ++m) {
    for (int n = 0; n < cols; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * cols + n;
      if (i == 0) {
        d[0] = local[0];
        continue;
      }
      double best = kInf;
      Move move = Move::start;
      if (m > 0 && n > 0) {
        best = d[i - cols - 1] + local[i];
        move = Move::diag;
      }
      if (m > 0 && d[i - cols] + gamma < best) {
        best = d[i - cols] + gamma;
        move = Move::skip_performance;
      }
      if (n > 0 && d[i - 1] + gamma < best) {
        best = d[i - 1] + gamma;
        move = Move::skip_score;
      }
      c.moves[i] = move;
      d[i] = best;
    }
  }
  return c;
}

AlignmentPath backtrack(const CostMatrix& costs) {
  const int cols = costs.cols();
  int m = costs.rows() - 1;
  int n = cols - 1;
  AlignmentPath path;
  path.total_cost = costs.values(m, n);
  while (true) {
    const std::size_t i = costs.index(m, n);
    const Move move = costs.moves[i];
    path.cells.push_back({m, n, move});
    switch (move) {
      case Move::start:
        if (m != 0 || n != 0) throw Error("backtrack reached a cell without predecessor");
        std::reverse(path.cells.begin(), path.cells.end());
        for (std::size_t k = 0; k < path.cells.size(); ++k) {
          if (path.cells[k].move == Move::jump) path.jump_positions.push_back(k);
        }
        return path;
      case Move::diag: --m; --n; break;
      case Move::up:
      case Move::skip_performance: --m; break;
      case Move::left:
      case Move::skip_score: --n; break;
      case Move::jump: {
        const std::size_t src = costs.edge_source.at(static_cast<std::size_t>(costs.jump_edge[i]));
        m = static_cast<int>(src / cols);
        n = static_cast<int>(src % cols);
        break;
      }
    }
  }
}

AlignmentPath dtw(const RowMatrix& e) { return backtrack(dtw_costs(e)); }
AlignmentPath dtw(const CrossSimilarityMatrix& csm) { return dtw(csm.values); }

AlignmentPath jump_dtw(const RowMatrix& e, const InflectionPointList& points,
                       const JumpOptions& options) {
  return backtrack(jump_dtw_costs(e, points, options));
}
AlignmentPath jump_dtw(const CrossSimilarityMatrix& csm, const InflectionPointList& points,
                       const JumpOptions& options) {
  return jump_dtw(csm.values, points, options);
}

AlignmentPath nwtw_align(const RowMatrix& e, const NwtwParams& params) {
  return backtrack(nwtw_costs(e, params));
}
AlignmentPath nwtw_align(const CrossSimilarityMatrix& csm, const NwtwParams& params) {
  return nwtw_align(csm.values, params);
}

void validate_path(const AlignmentPath& path, int rows, int cols,
                   const InflectionPointList& points) {
  const auto& cells = path.cells;
  if (cells.empty()) throw ArgumentError("path is empty");
  auto at = [](std::size_t k) { return "path cell " + std::to_string(k); };
  if (cells.front().performance_frame != 0 || cells.front().score_frame != 0 ||
      cells.front().move != Move::start) {
    throw ArgumentError("path does not start at (0, 0)");
  }
  if (cells.back().performance_frame != rows - 1 || cells.back().score_frame != cols - 1) {
    throw ArgumentError("path does not end at (" + std::to_string(rows - 1) + ", " +
                        std::to_string(cols - 1) + ")");
  }
  std::vector<std::size_t> jumps;
  for (std::size_t k = 1; k < cells.size(); ++k) {
    const auto& a = cells[k - 1];
    const auto& b = cells[k];
    if (b.performance_frame < 0 || b.performance_frame >= rows || b.score_frame < 0 ||
        b.score_frame >= cols) {
      throw ArgumentError(at(k) + " is out of bounds");
    }
    if (b.performance_frame < a.performance_frame) {
      throw ArgumentError(at(k) + " moves backwards in performance time");
    }
    const int dm = b.performance_frame - a.performance_frame;
    const int dn = b.score_frame - a.score_frame;
    bool ok = false;
    switch (b.move) {
      case Move::start: ok = false; break;
      case Move::diag: ok = dm == 1 && dn == 1; break;
      case Move::up:
      case Move::skip_performance: ok = dm == 1 && dn == 0; break;
      case Move::left:
      case Move::skip_score: ok = dm == 0 && dn == 1; break;
      case Move::jump:
        jumps.push_back(k);
        for (std::size_t i = 0; i + 1 < points.size(); i += 2) {
          if (points[i].performance_frame == a.performance_frame &&
              points[i].score_frame == a.score_frame &&
              points[i + 1].performance_frame == b.performance_frame &&
              points[i + 1].score_frame == b.score_frame) {
            ok = true;
          }
        }
        break;
    }
    if (!ok) {
      throw ArgumentError(at(k) + " is not reachable from its predecessor by a " +
                          move_name(b.move) + " move");
    }
  }
  if (jumps != path.jump_positions) throw ArgumentError("jump positions do not match the cells");
}

std::vector<std::pair<double, double>> path_to_time_map(const AlignmentPath& path,
                                                        double performance_rate,
                                                        double score_rate) {
  if (!(performance_rate > 0.0) || !(score_rate > 0.0)) {
    throw ArgumentError("frame rates must be positive");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(path.cells.size());
  for (const auto& c : path.cells) {
    out.emplace_back(c.performance_frame / performance_rate, c.score_frame / score_rate);
  }
  return out;
}

ScoreLookup::ScoreLookup(const AlignmentPath& path) {
  std::size_t begin = 0;
  auto close_pass = [&](std::size_t end) {
    Pass pass;
    std::vector<int> first_at;
    bool any = false;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& c = path.cells[k];
      if (!c.matched()) continue;
      if (!any) {
        pass.first_score = pass.last_score = c.score_frame;
        pass.entry_performance = c.performance_frame;
        any = true;
      }
      pass.first_score = std::min(pass.first_score, c.score_frame);
      pass.last_score = std::max(pass.last_score, c.score_frame);
    }
    if (!any) return;
    const auto span = static_cast<std::size_t>(pass.last_score - pass.first_score + 1);
    pass.frame.assign(span, -1);
    first_at.assign(span, -1);
    for (std::size_t k = begin; k < end; ++k) {
      const auto& c = path.cells[k];
      if (!c.matched()) continue;
      const auto j = static_cast<std::size_t>(c.score_frame - pass.first_score);
      pass.frame[j] = c.performance_frame;
      if (first_at[j] < 0) first_at[j] = c.performance_frame;
    }
    int resume = -1;
    for (std::size_t j = span; j-- > 0;) {
      if (pass.frame[j] < 0) {
        pass.frame[j] = resume;
      } else {
        resume = first_at[j];
      }
    }
    passes_.push_back(std::move(pass));
  };
  for (std::size_t k = 0; k < path.cells.size(); ++k) {
    if (path.cells[k].move == Move::jump && k > begin) {
      close_pass(k);
      begin = k;
    }
  }
  close_pass(path.cells.size());
  if (passes_.empty()) throw ArgumentError("path has no matched cells");
}

std::vector<int> ScoreLookup::occurrences(int score_frame) const {
  std::vector<int> out;
  int previous_last = -1;
  for (const auto& pass : passes_) {
    if (score_frame >= pass.first_score && score_frame <= pass.last_score) {
      out.push_back(pass.frame[static_cast<std::size_t>(score_frame - pass.first_score)]);
    } else if (score_frame > previous_last && score_frame < pass.first_score) {
      out.push_back(pass.entry_performance);
    }
    previous_last = pass.last_score;
  }
  if (out.empty()) {
    // Outside every pass: clamp into the nearest one.
    const Pass* nearest = &passes_.front();
    int best = std::numeric_limits<int>::max();
    for (const auto& pass : passes_) {
      const int dist = score_frame < pass.first_score ? pass.first_score - score_frame
                                                      : score_frame - pass.last_score;
      if (dist < best) {
        best = dist;
        nearest = &pass;
      }
    }
    const int n = std::clamp(score_frame, nearest->first_score, nearest->last_score);
    out.push_back(nearest->frame[static_cast<std::size_t>(n - nearest->first_score)]);
  }
  return out;
}

int ScoreLookup::performance_frame(int score_frame, std::size_t occurrence) const {
  const auto occ = occurrences(score_frame);
  return occ[std::min(occurrence, occ.size() - 1)];
}

std::string path_to_csv(const AlignmentPath& path) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, path.total_cost);
  std::string out = "# cost " + std::string(buf, res.ptr) + "\nperf_frame,score_frame,move\n";
  for (const auto& c : path.cells) {
    out += std::to_string(c.performance_frame) + ',' + std::to_string(c.score_frame) + ',' +
           move_name(c.move) + '\n';
  }
  return out;
}

AlignmentPath path_from_csv(const std::string& text) {
  AlignmentPath path;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  bool header = false;
  auto fail = [&](const std::string& why) { throw ParseError(offset, why); };
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# cost ", 0) == 0) {
      const std::string v = line.substr(7);
      const auto res = std::from_chars(v.data(), v.data() + v.size(), path.total_cost);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        offset = line_start;
        fail("bad cost line");
      }
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != "perf_frame,score_frame,move") {
        offset = line_start;
        fail("expected header perf_frame,score_frame,move");
      }
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      offset = line_start;
      fail("expected three fields");
    }
    PathCell cell;
    const auto r1 = std::from_chars(line.data(), line.data() + c1, cell.performance_frame);
    const auto r2 = std::from_chars(line.data() + c1 + 1, line.data() + c2, cell.score_frame);
    if (r1.ec != std::errc() || r1.ptr != line.data() + c1 || r2.ec != std::errc() ||
        r2.ptr != line.data() + c2) {
      offset = line_start;
      fail("bad frame index");
    }
    try {
      cell.move = parse_move(line.substr(c2 + 1));
    } catch (const ArgumentError& e) {
      offset = line_start;
      fail(e.what());
    }
    if (cell.move == Move::jump) path.jump_positions.push_back(path.cells.size());
    path.cells.push_back(cell);
  }
  if (!header) fail("missing header");
  return path;
}

void write_path_csv(const std::filesystem::path& file, const AlignmentPath& path) {
  io::write_text_file(file, path_to_csv(path));
}

AlignmentPath read_path_csv(const std::filesystem::path& file) {
  return path_from_csv(io::read_text_file(file));
}

std::vector<std::uint8_t> encode_path_overlay(const RowMatrix& e, const AlignmentPath& path) {
  RowMatrix canvas = e;
  const double lo = e.size() ? e.minCoeff() : 0.0;
  const double hi = e.size() ? e.maxCoeff() : 0.0;
  const double mark = hi + 0.25 * (hi > lo ? hi - lo : 1.0);
  for (const auto& c : path.cells) {
    if (c.performance_frame < canvas.rows() && c.score_frame < canvas.cols()) {
      canvas(c.performance_frame, c.score_frame) = mark;
    }
  }
  return encode_pgm(canvas);
}

}  // namespace structalign
