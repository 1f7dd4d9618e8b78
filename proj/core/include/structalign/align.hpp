#pragma once

// Dynamic-programming alignment of a performance (rows) against a score
// (columns) over a cross-similarity matrix.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "structalign/inflection.hpp"
#include "structalign/matrix.hpp"
#include "structalign/simgrid.hpp"

namespace structalign {

// How a path cell was entered. up advances the performance only, left the
// score only. The skip moves are the gap-penalty counterparts of up/left and
// leave the cell unmatched.
enum class Move : std::uint8_t { start, diag, up, left, jump, skip_performance, skip_score };

const char* move_name(Move move);
Move parse_move(const std::string& name);

struct PathCell {
  int performance_frame = 0;
  int score_frame = 0;
  Move move = Move::start;

  bool matched() const { return move != Move::skip_performance && move != Move::skip_score; }
  friend bool operator==(const PathCell&, const PathCell&) = default;
};

struct AlignmentPath {
  std::vector<PathCell> cells;
  double total_cost = 0.0;
  std::vector<std::size_t> jump_positions;  // indices into cells entered by a jump
};

// Accumulated cost D and the move that realized each entry. jump_edge holds
// the index of the inflection pair used when the move is a jump, else -1.
struct CostMatrix {
  RowMatrix values;
  std::vector<Move> moves;
  std::vector<int> jump_edge;
  std::vector<std::size_t> edge_source;  // flat source cell per inflection pair

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  std::size_t index(int m, int n) const { return static_cast<std::size_t>(m) * cols() + n; }
};

struct JumpOptions {
  double jump_penalty = 0.0;  // added to every jump edge
};

struct NwtwParams {
  // Cost per skipped frame. Matching wins over a pair of skips while
  // e(m, n) < 2 * gamma; 0.5 suits unit-norm chroma distances in [0, sqrt 2].
  double gamma = 0.5;
};

// D(m, n) = e(m, n) + min(D(m-1, n-1), D(m-1, n), D(m, n-1)) with D(0, 0) =
// e(0, 0). Ties prefer diag, then up, then left.
CostMatrix dtw_costs(const RowMatrix& e);
AlignmentPath dtw(const RowMatrix& e);
AlignmentPath dtw(const CrossSimilarityMatrix& csm);

// As dtw, and D(a_i, b_i) may additionally be reached from D(a_{i-1},
// b_{i-1}) for every second point i (1-based even). Points must be
// chronological, of even count, inside the matrix, and each jump source
// must be computed before its target (row-major order).
CostMatrix jump_dtw_costs(const RowMatrix& e, const InflectionPointList& points,
                          const JumpOptions& options = {});
AlignmentPath jump_dtw(const RowMatrix& e, const InflectionPointList& points,
                       const JumpOptions& options = {});
AlignmentPath jump_dtw(const CrossSimilarityMatrix& csm, const InflectionPointList& points,
                       const JumpOptions& options = {});

// D(m, n) = min(D(m-1, n-1) + e(m, n), D(m-1, n) + gamma, D(m, n-1) + gamma).
CostMatrix nwtw_costs(const RowMatrix& e, const NwtwParams& params);
AlignmentPath nwtw_align(const RowMatrix& e, const NwtwParams& params);
AlignmentPath nwtw_align(const CrossSimilarityMatrix& csm, const NwtwParams& params);

AlignmentPath backtrack(const CostMatrix& costs);

// Throws ArgumentError describing the first violated path invariant. Jump
// cells must follow one of the declared edges.
void validate_path(const AlignmentPath& path, int rows, int cols,
                   const InflectionPointList& points = {});

// (m / performance_rate, n / score_rate) for every cell.
std::vector<std::pair<double, double>> path_to_time_map(const AlignmentPath& path,
                                                        double performance_rate,
                                                        double score_rate);

// Score frame -> performance frame lookup. The path is cut into passes at
// jump cells; each pass that covers a score frame yields one occurrence.
// Within a pass the last matched cell on the frame is used; a frame the pass
// steps over resolves to the next matched cell (where alignment resumes),
// and a frame jumped over by a forward jump resolves to the first cell after
// the jump.
class ScoreLookup {
 public:
  explicit ScoreLookup(const AlignmentPath& path);

  // Performance frames, one per pass, in path order. Never empty for a
  // frame in [0, max score frame].
  std::vector<int> occurrences(int score_frame) const;
  // The occurrence-th entry, or the last one when there are fewer.
  int performance_frame(int score_frame, std::size_t occurrence = 0) const;

 private:
  struct Pass {
    int first_score = 0;
    int last_score = -1;
    int entry_performance = 0;
    std::vector<int> frame;  // performance frame per score frame in range
  };
  std::vector<Pass> passes_;
};

// "# cost <value>", header "perf_frame,score_frame,move", one row per cell.
std::string path_to_csv(const AlignmentPath& path);
AlignmentPath path_from_csv(const std::string& text);
void write_path_csv(const std::filesystem::path& file, const AlignmentPath& path);
AlignmentPath read_path_csv(const std::filesystem::path& file);

// Grayscale rendering of the matrix with the path drawn in white.
std::vector<std::uint8_t> encode_path_overlay(const RowMatrix& e, const AlignmentPath& path);

}  // namespace structalign
