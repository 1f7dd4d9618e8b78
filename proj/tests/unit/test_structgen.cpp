#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "structalign/align.hpp"
#include "structalign/error.hpp"
#include "structalign/neural/targets.hpp"
#include "structalign/random.hpp"
#include "structalign/simgrid.hpp"
#include "structalign/structgen.hpp"

using namespace structalign;

namespace {

// Random non-negative unit frames; distinct with probability one.
FeatureSequence random_score(int frames, std::uint64_t seed) {
  Rng rng(seed);
  FeatureSequence seq;
  seq.vectors.resize(frames, 12);
  for (int r = 0; r < frames; ++r)
    for (int c = 0; c < 12; ++c) seq.vectors(r, c) = uniform01(rng);
  normalize_frames(seq.vectors);
  return seq;
}

int backward_jumps(const StructurePlan& plan) {
  int n = 0;
  const auto& s = plan.segments();
  for (std::size_t i = 1; i < s.size(); ++i) n += s[i].score_start <= s[i - 1].score_end;
  return n;
}

int forward_jumps(const StructurePlan& plan) {
  int n = 0;
  const auto& s = plan.segments();
  for (std::size_t i = 1; i < s.size(); ++i) n += s[i].score_start > s[i - 1].score_end + 1;
  return n;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<FeatureSequence> piece_scores(int count, std::uint64_t seed) {
  std::vector<FeatureSequence> out;
  for (int i = 0; i < count; ++i) out.push_back(score_features(generate_piece(seed + i)));
  return out;
}

}  // namespace

TEST_CASE("plans: identity and canonical form") {
  PlanConfig cfg;
  cfg.num_repeats = 0;
  const auto plan = sample_plan(100, 3, cfg);
  CHECK(plan == StructurePlan::identity(100));
  REQUIRE(plan.segments().size() == 1);
  CHECK(plan.segments()[0] == Segment{0, 99, 1.0});
  CHECK(plan.inflection_points().empty());
  CHECK(plan.discontinuities() == 0);
  CHECK(plan.performance_length() == 100);

  const StructurePlan merged(50, {{0, 9, 1.0}, {10, 29, 1.0}, {30, 49, 1.0}});
  CHECK(merged == StructurePlan::identity(50));
  const StructurePlan kept(50, {{0, 9, 1.0}, {10, 49, 1.5}});
  CHECK(kept.segments().size() == 2);
  CHECK(kept.discontinuities() == 0);
  CHECK(kept.inflection_points().empty());

  CHECK_THROWS_AS(StructurePlan(50, {}), ArgumentError);
  CHECK_THROWS_AS(StructurePlan(50, {{0, 50, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(StructurePlan(50, {{5, 5, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(StructurePlan(50, {{-1, 10, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(StructurePlan(50, {{0, 10, 0.0}}), ArgumentError);
}

TEST_CASE("plans: a forced repeat gives the hand-traced inflection points") {
  // Score frames 0..99; block [20, 59] is played twice.
  const StructurePlan plan(100, {{0, 59, 1.0}, {20, 99, 1.0}});
  CHECK(plan.discontinuities() == 1);
  CHECK(plan.performance_length() == 140);
  CHECK(plan.inflection_points() == InflectionPointList{{59, 59}, {60, 20}});
  CHECK(plan.describe() == "0-59@1;20-99@1");

  // At double tempo the first pass renders 30 frames.
  const StructurePlan fast(100, {{0, 59, 2.0}, {20, 99, 1.0}});
  CHECK(fast.inflection_points() == InflectionPointList{{29, 59}, {30, 20}});

  // A skip is a forward jump.
  const StructurePlan skip(100, {{0, 39, 1.0}, {60, 99, 1.0}});
  CHECK(skip.inflection_points() == InflectionPointList{{39, 39}, {40, 60}});
  const auto warp = skip.warp_map();
  CHECK(warp.pass_starts == std::vector<int>{0, 40});
  CHECK(warp.score_frames[39] == 39);
  CHECK(warp.score_frames[40] == 60);
}

TEST_CASE("plans: tempo resampling") {
  const Segment s{0, 9, 2.0};
  CHECK(s.rendered_length() == 5);
  CHECK(Segment{0, 9, 0.5}.rendered_length() == 20);
  CHECK(Segment{0, 1, 4.0}.rendered_length() == 2);

  const StructurePlan plan(10, {s});
  const auto warp = plan.warp_map();
  REQUIRE(warp.size() == 5);
  // Nearest neighbour on j * 9 / 4, halves rounded up.
  std::vector<int> expected;
  for (int j = 0; j < 5; ++j) expected.push_back(static_cast<int>(std::floor(j * 9.0 / 4 + 0.5)));
  CHECK(warp.score_frames == expected);
  CHECK(warp.score_frames == std::vector<int>{0, 2, 5, 7, 9});

  const auto slow = StructurePlan(10, {{0, 9, 0.5}}).warp_map();
  REQUIRE(slow.size() == 20);
  CHECK(slow.score_frames.front() == 0);
  CHECK(slow.score_frames.back() == 9);
  CHECK(std::is_sorted(slow.score_frames.begin(), slow.score_frames.end()));
}

TEST_CASE("plans: sampled invariants and determinism") {
  PlanConfig cfg;
  cfg.min_segment_frames = 20;
  for (int repeats : {1, 2, 3}) {
    for (double jump : {0.0, 1.0}) {
      cfg.num_repeats = repeats;
      cfg.jump_prob = jump;
      for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto plan = sample_plan(400, seed, cfg);
        CHECK(plan == sample_plan(400, seed, cfg));
        const auto& segs = plan.segments();
        CHECK(segs.front().score_start == 0);
        CHECK(segs.back().score_end == 399);
        for (const auto& s : segs) {
          CHECK(s.length() >= cfg.min_segment_frames);
          CHECK(s.tempo_factor >= cfg.tempo_min);
          CHECK(s.tempo_factor <= cfg.tempo_max);
        }
        CHECK(backward_jumps(plan) == repeats);
        if (jump == 1.0) CHECK(forward_jumps(plan) >= 1);
        if (jump == 0.0) CHECK(forward_jumps(plan) == 0);
        const auto pts = plan.inflection_points();
        CHECK(pts.size() == 2 * static_cast<std::size_t>(plan.discontinuities()));
        for (std::size_t i = 1; i < pts.size(); ++i) {
          CHECK(pts[i].performance_frame > pts[i - 1].performance_frame);
        }
        const auto warp = plan.warp_map();
        CHECK(warp.size() == plan.performance_length());
        CHECK(warp.pass_starts.size() == static_cast<std::size_t>(plan.discontinuities()) + 1);
      }
    }
  }
  cfg.num_repeats = 1;
  cfg.jump_prob = 0.0;
  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) distinct.insert(sample_plan(400, seed, cfg).describe());
  CHECK(distinct.size() > 10);

  CHECK_THROWS_AS(sample_plan(39, 1, cfg), TooShortError);
  cfg.num_repeats = -1;
  CHECK_THROWS_AS(sample_plan(400, 1, cfg), ArgumentError);
}

TEST_CASE("render: identity plan copies the score") {
  const auto score = random_score(50, 7);
  const auto out = render_performance(score, StructurePlan::identity(50), 0.0, 1);
  CHECK(out.performance.vectors == score.vectors);
  CHECK(out.warp.pass_starts == std::vector<int>{0});
  for (int m = 0; m < 50; ++m) CHECK(out.warp.score_frames[m] == m);
  CHECK(out.inflection_points.empty());

  CHECK_THROWS_AS(render_performance(score, StructurePlan::identity(49), 0.0, 1), ArgumentError);
  CHECK_THROWS_AS(render_performance(score, StructurePlan::identity(50), -1.0, 1), ArgumentError);
}

TEST_CASE("render: noise keeps frames non-negative and unit length") {
  const auto score = random_score(60, 8);
  const StructurePlan plan(60, {{0, 39, 1.1}, {10, 59, 0.9}});
  const auto a = render_performance(score, plan, 0.05, 99);
  const auto b = render_performance(score, plan, 0.05, 99);
  CHECK(a.performance.vectors == b.performance.vectors);
  CHECK(a.performance.vectors != render_performance(score, plan, 0.05, 100).performance.vectors);
  CHECK(a.performance.num_frames() == plan.performance_length());
  for (int r = 0; r < a.performance.num_frames(); ++r) {
    CHECK(a.performance.vectors.row(r).minCoeff() >= 0.0);
    CHECK(std::abs(a.performance.vectors.row(r).norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("render: a repeat shows two zero-distance strokes") {
  const auto score = random_score(100, 11);
  const StructurePlan plan(100, {{0, 59, 1.0}, {30, 99, 1.0}});
  const auto out = render_performance(score, plan, 0.0, 1);
  const auto csm = cross_similarity(out.performance, score);
  REQUIRE(csm.rows() == 130);
  for (int n = 0; n < 100; ++n) {
    std::vector<int> hits;
    for (int m = 0; m < csm.rows(); ++m) {
      if (csm.values(m, n) < 1e-12) hits.push_back(m);
    }
    if (n >= 30 && n <= 59) {
      CHECK(hits == std::vector<int>{n, n + 30});
    } else if (n < 30) {
      CHECK(hits == std::vector<int>{n});
    } else {
      CHECK(hits == std::vector<int>{n + 30});
    }
  }
}

TEST_CASE("warp_to_path marks pass starts as jumps") {
  const StructurePlan plan(40, {{0, 29, 1.0}, {10, 39, 2.0}});
  const auto warp = plan.warp_map();
  const auto path = warp_to_path(warp);
  REQUIRE(path.cells.size() == static_cast<std::size_t>(warp.size()));
  CHECK(path.jump_positions == std::vector<std::size_t>{30});
  CHECK(path.cells[30].move == Move::jump);
  CHECK(path.cells[30].score_frame == 10);
  CHECK(path.cells[0].move == Move::start);
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    if (i != 30) CHECK(path.cells[i].move == Move::diag);
  }
}

TEST_CASE("generated pieces") {
  const auto a = generate_piece(5);
  const auto b = generate_piece(5);
  REQUIRE(a.notes.size() == b.notes.size());
  for (std::size_t i = 0; i < a.notes.size(); ++i) {
    CHECK(a.notes[i].pitch == b.notes[i].pitch);
    CHECK(a.notes[i].onset_seconds == b.notes[i].onset_seconds);
  }
  for (const auto& n : a.notes) {
    CHECK(n.pitch >= 0);
    CHECK(n.pitch <= 127);
    CHECK(n.duration_seconds > 0.0);
  }
  const auto feats = score_features(a);
  CHECK(feats.dims() == 12);
  // At least 24 beats at no more than 150 bpm.
  CHECK(feats.num_frames() >= static_cast<Eigen::Index>(24 * 60.0 / 150.0 * kDefaultFrameRate) - 1);

  PieceConfig bad;
  bad.max_beats = 1;
  CHECK_THROWS_AS(generate_piece(1, bad), ArgumentError);
}

TEST_CASE("dataset") {
  const auto scores = piece_scores(5, 300);
  DatasetConfig cfg;
  cfg.input_size = 32;
  const auto data = build_dataset(scores, cfg);
  REQUIRE(data.size() == 25);

  SUBCASE("layout and splits") {
    int validation = 0;
    for (const auto& s : data) {
      CHECK(s.split == data[s.piece * 5].split);
      CHECK(s.grid.size() == 32);
      CHECK(s.target.size() == static_cast<std::size_t>(neural::kTargetSize));
      if (s.variant == 0) {
        CHECK(s.plan == StructurePlan::identity(static_cast<int>(scores[s.piece].num_frames())));
        CHECK(std::all_of(s.target.begin(), s.target.end(), [](float v) { return v == 1.0f; }));
      } else {
        CHECK(backward_jumps(s.plan) == 1 + (s.variant - 1) / 2);
      }
      validation += s.split == Split::validation;
    }
    CHECK(validation == 5);
  }

  SUBCASE("targets decode to the plan within one frame") {
    for (const auto& s : data) {
      const auto truth = s.rendered.inflection_points;
      const auto back = neural::decode_predictions(s.target, s.rendered.warp.size(),
                                                   static_cast<int>(scores[s.piece].num_frames()));
      REQUIRE(back.size() == truth.size());
      for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(std::abs(back[i].performance_frame - truth[i].performance_frame) <= 1);
        CHECK(std::abs(back[i].score_frame - truth[i].score_frame) <= 1);
      }
    }
  }

  SUBCASE("deterministic per seed") {
    const auto again = build_dataset(scores, cfg);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(again[i].plan == data[i].plan);
      CHECK(again[i].target == data[i].target);
      CHECK(again[i].grid.values == data[i].grid.values);
      CHECK(again[i].rendered.performance.vectors == data[i].rendered.performance.vectors);
    }
    DatasetConfig other = cfg;
    other.seed = 43;
    const auto moved = build_dataset(scores, other);
    int same = 0;
    for (std::size_t i = 0; i < data.size(); ++i) same += moved[i].plan == data[i].plan;
    CHECK(same < 25);
  }

  CHECK_THROWS_AS(build_dataset({}, cfg), ArgumentError);
}

TEST_CASE("ground-truth points let jump_dtw follow the warp map") {
  const auto scores = piece_scores(4, 500);
  DatasetConfig cfg;
  cfg.noise_std = 0.0;
  cfg.input_size = 16;
  for (const auto& s : build_dataset(scores, cfg)) {
    const auto csm = cross_similarity(s.rendered.performance, scores[s.piece]);
    const auto path = jump_dtw(csm, s.rendered.inflection_points);
    std::vector<double> dev;
    for (const auto& c : path.cells) {
      dev.push_back(std::abs(c.score_frame - s.rendered.warp.score_frames[c.performance_frame]));
    }
    INFO("piece " << s.piece << " variant " << s.variant << " plan " << s.plan.describe());
    CHECK(median(dev) <= 2.0);
  }
}

TEST_CASE("derived seeds differ by argument") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 5; ++b) seen.insert(derive_seed(42, a, b));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
  CHECK(derive_seed(42, 1, 2) != derive_seed(43, 1, 2));
}
