#include <doctest.h>

#include <cmath>
#include <vector>

#include "structalign/align.hpp"
#include "structalign/error.hpp"
#include "structalign/random.hpp"
#include "support/oracles.hpp"

using namespace structalign;

namespace {

RowMatrix mat(int rows, int cols, std::initializer_list<double> v) {
  RowMatrix m(rows, cols);
  auto it = v.begin();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  return m;
}

std::vector<std::pair<int, int>> cells_of(const AlignmentPath& p) {
  std::vector<std::pair<int, int>> out;
  for (const auto& c : p.cells) out.emplace_back(c.performance_frame, c.score_frame);
  return out;
}

}  // namespace

TEST_CASE("dtw examples") {
  const auto p = dtw(mat(2, 2, {0, 1, 1, 0}));
  CHECK(cells_of(p) == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(p.total_cost == 0.0);
  CHECK(p.cells[1].move == Move::diag);

  const auto row = dtw(mat(1, 4, {0.5, 1.0, 2.0, 0.25}));
  CHECK(row.cells.size() == 4);
  CHECK(row.total_cost == 3.75);

  CHECK_THROWS_AS(dtw(RowMatrix(0, 3)), ArgumentError);
}

TEST_CASE("dtw follows a zero diagonal") {
  for (int n : {1, 2, 5, 9}) {
    RowMatrix e = RowMatrix::Ones(n, n);
    e.diagonal().setZero();
    const auto p = dtw(e);
    REQUIRE(p.cells.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) CHECK(p.cells[i] == PathCell{i, i, i ? Move::diag : Move::start});
    CHECK(p.total_cost == 0.0);
  }
}

TEST_CASE("dtw tie-breaking prefers diag, then up, then left") {
  // Backtracking from the end picks diag into (2, 1), then up into (1, 0).
  const auto p = dtw(RowMatrix::Zero(3, 2));
  CHECK(cells_of(p) == std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {2, 1}});
  CHECK(p.cells[1].move == Move::up);
  CHECK(p.cells[2].move == Move::diag);
  const auto q = dtw(RowMatrix::Zero(2, 3));
  CHECK(cells_of(q) == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 2}});
  CHECK(q.cells[1].move == Move::left);
}

TEST_CASE("dtw cost is transposition symmetric") {
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const RowMatrix e = oracle::random_matrix(rng, uniform_int(rng, 1, 12), uniform_int(rng, 1, 12));
    const RowMatrix t = e.transpose();
    CHECK(dtw(e).total_cost == dtw(t).total_cost);
  }
}

TEST_CASE("engines agree with exhaustive enumeration") {
  Rng rng(53);
  for (int trial = 0; trial < 150; ++trial) {
    const int rows = uniform_int(rng, 1, 5), cols = uniform_int(rng, 1, 5);
    const RowMatrix e = oracle::random_matrix(rng, rows, cols);
    CHECK(dtw(e).total_cost == oracle::enumerate_min_cost(e, {}));

    oracle::EnumerationSettings js;
    js.points = oracle::random_points(rng, rows, cols, uniform_int(rng, 0, 3));
    const auto jp = jump_dtw(e, js.points);
    CHECK(jp.total_cost == oracle::enumerate_min_cost(e, js));
    validate_path(jp, rows, cols, js.points);

    oracle::EnumerationSettings ns;
    ns.nwtw = true;
    ns.gamma = uniform_real(rng, 0.0, 1.0);
    const auto np = nwtw_align(e, {ns.gamma});
    CHECK(np.total_cost == oracle::enumerate_min_cost(e, ns));
    validate_path(np, rows, cols);
  }
}

TEST_CASE("jump edge beats the monotone path") {
  // Zero cells (0,0), (1,1), then (2,0), (3,1) and the rest of the last row.
  RowMatrix e = RowMatrix::Ones(4, 4);
  e(0, 0) = e(1, 1) = e(2, 0) = e(3, 1) = e(3, 2) = e(3, 3) = 0.0;
  const InflectionPointList pts{{1, 1}, {2, 0}};
  const auto j = jump_dtw(e, pts);
  const auto d = dtw(e);
  CHECK(j.total_cost == 0.0);
  CHECK(j.total_cost < d.total_cost);
  REQUIRE(j.jump_positions.size() == 1);
  CHECK(j.cells[j.jump_positions[0]] == PathCell{2, 0, Move::jump});
  oracle::EnumerationSettings s;
  s.points = pts;
  CHECK(j.total_cost == oracle::enumerate_min_cost(e, s));
  validate_path(j, 4, 4, pts);
}

TEST_CASE("jump_dtw with no points is dtw") {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const RowMatrix e = oracle::random_matrix(rng, uniform_int(rng, 1, 30), uniform_int(rng, 1, 30));
    const auto a = dtw(e);
    const auto b = jump_dtw(e, {});
    CHECK(a.cells == b.cells);
    CHECK(a.total_cost == b.total_cost);
    CHECK(path_to_csv(a) == path_to_csv(b));
  }
}

TEST_CASE("jump_dtw cost never exceeds dtw cost") {
  Rng rng(57);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = uniform_int(rng, 2, 25), cols = uniform_int(rng, 2, 25);
    const RowMatrix e = oracle::random_matrix(rng, rows, cols);
    const auto pts = oracle::random_points(rng, rows, cols, uniform_int(rng, 1, 5));
    CHECK(jump_dtw(e, pts).total_cost <= dtw(e).total_cost);
  }
}

TEST_CASE("repeated score block is visited twice") {
  // Score ABC (5 frames each), performance ABBC.
  Rng rng(59);
  RowMatrix score(15, 12);
  for (int i = 0; i < 15; ++i) {
    for (int k = 0; k < 12; ++k) score(i, k) = uniform01(rng);
    score.row(i).normalize();
  }
  std::vector<int> warp;
  for (int i = 0; i < 10; ++i) warp.push_back(i);
  for (int i = 5; i < 15; ++i) warp.push_back(i);
  RowMatrix perf(20, 12);
  for (int m = 0; m < 20; ++m) perf.row(m) = score.row(warp[m]);
  RowMatrix e(20, 15);
  for (int m = 0; m < 20; ++m)
    for (int n = 0; n < 15; ++n) e(m, n) = (perf.row(m) - score.row(n)).norm();

  const InflectionPointList pts{{9, 9}, {10, 5}};
  const auto p = jump_dtw(e, pts);
  REQUIRE(p.cells.size() == 20);
  for (int m = 0; m < 20; ++m) {
    CHECK(p.cells[m].performance_frame == m);
    CHECK(p.cells[m].score_frame == warp[m]);
  }
  int visits_b = 0;
  for (const auto& c : p.cells) visits_b += c.score_frame == 7;
  CHECK(visits_b == 2);
  CHECK(dtw(e).total_cost > p.total_cost);
}

TEST_CASE("jump_dtw rejects malformed point lists") {
  const RowMatrix e = RowMatrix::Ones(5, 5);
  CHECK_THROWS_AS(jump_dtw(e, {{1, 1}}), ArgumentError);
  CHECK_THROWS_AS(jump_dtw(e, {{1, 1}, {7, 0}}), ArgumentError);
  CHECK_THROWS_AS(jump_dtw(e, {{3, 1}, {1, 0}}), ArgumentError);
  try {
    jump_dtw(e, {{1, 1}, {2, -1}});
    FAIL("negative frame accepted");
  } catch (const ArgumentError& err) {
    CHECK(std::string(err.what()).find("(2, -1)") != std::string::npos);
  }
}

TEST_CASE("nwtw examples") {
  CHECK(nwtw_align(mat(1, 1, {0.7}), {0.0}).total_cost == 0.7);
  CHECK(nwtw_align(mat(1, 1, {0.7}), {5.0}).total_cost == 0.7);

  // Large gamma: the diagonal is always cheaper than detours.
  Rng rng(61);
  const RowMatrix e = oracle::random_matrix(rng, 5, 5);
  const auto p = nwtw_align(e, {1e3});
  for (std::size_t i = 0; i < p.cells.size(); ++i) CHECK(p.cells[i].score_frame == static_cast<int>(i));

  // gamma = 0: skipping is free, so only the start cell costs anything.
  const auto z = nwtw_align(e, {0.0});
  CHECK(z.total_cost == e(0, 0));
  for (std::size_t i = 1; i < z.cells.size(); ++i) CHECK_FALSE(z.cells[i].matched());

  CHECK_THROWS_AS(nwtw_align(e, {-1.0}), ArgumentError);
}

TEST_CASE("validate_path catches broken invariants") {
  AlignmentPath p;
  p.cells = {{0, 0, Move::start}, {1, 1, Move::diag}};
  validate_path(p, 2, 2);
  CHECK_THROWS_AS(validate_path(p, 3, 2), ArgumentError);
  p.cells[1] = {1, 0, Move::diag};
  CHECK_THROWS_AS(validate_path(p, 2, 1), ArgumentError);
  p.cells = {{0, 0, Move::start}, {0, 1, Move::left}, {1, 0, Move::jump}, {1, 1, Move::left}};
  p.jump_positions = {2};
  CHECK_THROWS_AS(validate_path(p, 2, 2), ArgumentError);
  validate_path(p, 2, 2, {{0, 1}, {1, 0}});
}

TEST_CASE("time map") {
  AlignmentPath p;
  p.cells = {{0, 0, Move::start}, {3, 5, Move::jump}};
  const auto tm = path_to_time_map(p, 1.0, 1.0);
  CHECK(tm[1] == std::pair{3.0, 5.0});
  const auto half = path_to_time_map(p, 2.0, 4.0);
  CHECK(half[1] == std::pair{1.5, 1.25});
}

TEST_CASE("score lookup") {
  SUBCASE("monotone path uses the last matched cell, gaps resolve forward") {
    AlignmentPath p;
    p.cells = {{0, 0, Move::start}, {1, 0, Move::up},   {2, 1, Move::diag},
               {2, 2, Move::left},  {3, 4, Move::diag}, {4, 4, Move::up}};
    const ScoreLookup lk(p);
    CHECK(lk.performance_frame(0) == 1);
    CHECK(lk.performance_frame(1) == 2);
    CHECK(lk.performance_frame(2) == 2);
    CHECK(lk.performance_frame(3) == 3);  // stepped over, alignment resumes at (3, 4)
    CHECK(lk.performance_frame(4) == 4);
    CHECK(lk.occurrences(4).size() == 1);
  }
  SUBCASE("backward jump gives two occurrences") {
    AlignmentPath p;
    p.cells = {{0, 0, Move::start}, {1, 1, Move::diag}, {2, 2, Move::diag},
               {3, 1, Move::jump},  {4, 2, Move::diag}, {5, 3, Move::diag}};
    p.jump_positions = {3};
    const ScoreLookup lk(p);
    CHECK(lk.occurrences(2) == std::vector<int>{2, 4});
    CHECK(lk.performance_frame(2, 1) == 4);
    CHECK(lk.performance_frame(0, 1) == 0);  // only one pass covers frame 0
    CHECK(lk.occurrences(3) == std::vector<int>{5});
  }
  SUBCASE("forward jump resolves skipped frames to the landing cell") {
    AlignmentPath p;
    p.cells = {{0, 0, Move::start}, {1, 1, Move::diag}, {2, 5, Move::jump}, {3, 6, Move::diag}};
    p.jump_positions = {2};
    const ScoreLookup lk(p);
    CHECK(lk.performance_frame(3) == 2);
    CHECK(lk.occurrences(3).size() == 1);
    CHECK(lk.performance_frame(6) == 3);
  }
  SUBCASE("skipped cells do not count as matched") {
    AlignmentPath p;
    p.cells = {{0, 0, Move::start}, {0, 1, Move::skip_score}, {1, 2, Move::diag}};
    const ScoreLookup lk(p);
    CHECK(lk.performance_frame(1) == 1);
  }
}

TEST_CASE("path csv round trip") {
  Rng rng(63);
  const RowMatrix e = oracle::random_matrix(rng, 20, 17);
  const auto pts = oracle::random_points(rng, 20, 17, 3);
  const auto p = jump_dtw(e, pts);
  const std::string csv = path_to_csv(p);
  CHECK(csv.rfind("# cost ", 0) == 0);
  CHECK(csv.find("perf_frame,score_frame,move\n") != std::string::npos);
  const auto back = path_from_csv(csv);
  CHECK(back.cells == p.cells);
  CHECK(back.total_cost == p.total_cost);
  CHECK(back.jump_positions == p.jump_positions);
  CHECK(path_to_csv(back) == csv);

  const auto n = nwtw_align(e, {0.3});
  CHECK(path_from_csv(path_to_csv(n)).cells == n.cells);

  CHECK_THROWS_AS(path_from_csv("# cost 1\nperf_frame,score_frame,move\n0,0,teleport\n"), ParseError);
  CHECK_THROWS_AS(path_from_csv("0,0,start\n"), ParseError);
  CHECK(parse_move(move_name(Move::skip_performance)) == Move::skip_performance);
}

TEST_CASE("path overlay image") {
  const RowMatrix e = RowMatrix::Ones(3, 4);
  const auto p = dtw(e);
  const auto pgm = encode_path_overlay(e, p);
  CHECK(std::string(pgm.begin(), pgm.begin() + 3) == "P5\n");
}
