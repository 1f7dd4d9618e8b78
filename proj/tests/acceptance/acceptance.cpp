// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/corpus.hpp"
#include "structalign/align.hpp"
#include "structalign/binary_io.hpp"
#include "structalign/eval.hpp"
#include "structalign/features.hpp"
#include "structalign/neural/checkpoint.hpp"
#include "structalign/neural/model.hpp"
#include "structalign/neural/train.hpp"
#include "structalign/random.hpp"
#include "structalign/simgrid.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/receptive.hpp"

namespace fs = std::filesystem;
using namespace structalign;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int run_cli(const std::vector<std::string>& args, const fs::path& log_file) {
  std::ofstream log(log_file, std::ios::app);
  log << "$ structalign";
  for (const auto& a : args) log << ' ' << a;
  log << '\n';
  return cli::run(args, log);
}

// ---------------------------------------------------------------------------
// Synthetic structured corpus shared by criteria 4 and 5.

struct StructuredCorpus {
  cli::Corpus corpus;
  double build_seconds = 0.0;
};

const StructuredCorpus& structured_corpus() {
  static std::optional<StructuredCorpus> cached;
  if (!cached) {
    const auto start = Clock::now();
    cli::CorpusConfig cfg;
    cfg.pieces = 100;
    cfg.dataset.variants_per_piece = 5;
    cfg.dataset.noise_std = 0.05;
    cfg.dataset.plan.jump_prob = 0.5;
    cfg.dataset.seed = 42;
    cached.emplace();
    cached->corpus = cli::generate_corpus(cfg);
    cached->build_seconds = seconds_since(start);
  }
  return *cached;
}

// ---------------------------------------------------------------------------

Outcome dp_oracle_equivalence() {
  const auto start = Clock::now();
  Rng rng(1001);
  int mismatches = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const int rows = uniform_int(rng, 1, 6);
    const int cols = uniform_int(rng, 1, 7);
    const RowMatrix e = oracle::random_matrix(rng, rows, cols);

    mismatches += dtw(e).total_cost != oracle::enumerate_min_cost(e, {});

    oracle::EnumerationSettings js;
    js.points = oracle::random_points(rng, rows, cols, uniform_int(rng, 0, 4));
    mismatches += jump_dtw(e, js.points).total_cost != oracle::enumerate_min_cost(e, js);

    oracle::EnumerationSettings ns;
    ns.nwtw = true;
    ns.gamma = uniform_real(rng, 0.0, 1.0);
    mismatches += nwtw_align(e, NwtwParams{ns.gamma}).total_cost != oracle::enumerate_min_cost(e, ns);
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 60.0,
          std::to_string(trials) + " matrices x 3 engines, " + std::to_string(mismatches) +
              " mismatches, " + fmt("%.1f s", secs)};
}

Outcome dilated_kernel_equivalence() {
  using namespace neural;
  Rng rng(2002);
  double worst = 0.0;
  int inputs = 0;
  for (int m : {1, 3, 5}) {
    for (int d : {1, 2, 3}) {
      const int extent = m + (d - 1) * (m - 1);
      for (int t = 0; t < 20; ++t, ++inputs) {
        DilatedKernelSpec spec;
        spec.kernel_size = m;
        spec.dilation = d;
        spec.in_channels = uniform_int(rng, 1, 4);
        spec.out_channels = uniform_int(rng, 1, 4);
        spec.padding = uniform_int(rng, 0, extent / 2);
        const int h = uniform_int(rng, extent, 20);
        const int w = uniform_int(rng, extent, 20);
        const auto x = gradcheck::random_grid(rng, uniform_int(rng, 1, 2), spec.in_channels, h, w);
        const auto weights = gradcheck::random_vector(rng, spec.weight_count());
        const auto bias = gradcheck::random_vector(rng, spec.out_channels);

        DilatedKernelSpec inflated = spec;
        inflated.kernel_size = extent;
        inflated.dilation = 1;
        const auto wi = oracle::inflate_kernel(weights, spec.out_channels, spec.in_channels, m, d);
        const auto a = conv2d_dilated<double>(x, spec, weights, bias);
        const auto b = conv2d_dilated<double>(x, inflated, wi, bias);
        if (a.shape != b.shape) return {false, "shape mismatch at input " + std::to_string(inputs)};
        for (std::size_t i = 0; i < a.data.size(); ++i) {
          worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
        }
      }
    }
  }
  return {worst <= 1e-10,
          std::to_string(inputs) +
              " inputs, m in {1,3,5} x d in {1,2,3} vs inflated d=1, max abs diff " +
              fmt("%.3g", worst)};
}

Outcome gradient_checks() {
  std::map<std::string, gradcheck::Result> merged;
  std::vector<std::string> order;
  for (std::uint64_t round = 0; round < 4; ++round) {
    for (const auto& r : gradcheck::check_all_layers(3003 + 100 * round)) {
      auto [it, fresh] = merged.try_emplace(r.layer, gradcheck::Result{r.layer});
      if (fresh) order.push_back(r.layer);
      it->second.coordinates += r.coordinates;
      it->second.failures += r.failures;
      it->second.max_relative_error = std::max(it->second.max_relative_error, r.max_relative_error);
    }
  }
  bool ok = true;
  int fewest = std::numeric_limits<int>::max();
  double worst = 0.0;
  std::string bad;
  for (const auto& name : order) {
    const auto& r = merged[name];
    fewest = std::min(fewest, r.coordinates);
    worst = std::max(worst, r.max_relative_error);
    if (!r.ok(100, gradcheck::kTolerance)) {
      ok = false;
      bad += " " + name;
    }
  }
  return {ok, std::to_string(order.size()) + " layers, >= " + std::to_string(fewest) +
                  " coordinates each, eps 1e-4, max relative error " + fmt("%.2g", worst) +
                  (bad.empty() ? "" : ", failing:" + bad)};
}

Outcome jump_cost_dominance() {
  Rng rng(4004);
  int inputs = 0;
  int violations = 0;
  for (int t = 0; t < 1000; ++t, ++inputs) {
    const int rows = uniform_int(rng, 1, 40);
    const int cols = uniform_int(rng, 1, 40);
    const RowMatrix e = oracle::random_matrix(rng, rows, cols);
    const auto pts = oracle::random_points(rng, rows, cols, uniform_int(rng, 0, 16));
    violations += !(jump_dtw(e, pts).total_cost <= dtw(e).total_cost);
  }
  const auto& sc = structured_corpus();
  for (const auto& s : sc.corpus.samples) {
    const auto csm = cross_similarity(s.rendered.performance, sc.corpus.features[s.piece]);
    const double base = dtw(csm).total_cost;
    violations += !(jump_dtw(csm, s.rendered.inflection_points).total_cost <= base);
    const auto random = oracle::random_points(rng, static_cast<int>(csm.rows()),
                                              static_cast<int>(csm.cols()), uniform_int(rng, 1, 8));
    violations += !(jump_dtw(csm, random).total_cost <= base);
    inputs += 2;
  }
  return {violations == 0,
          std::to_string(inputs) + " inputs, " + std::to_string(violations) + " violations"};
}

Outcome oracle_points_recovery() {
  const auto start = Clock::now();
  const auto& sc = structured_corpus();
  std::vector<AccuracyReport> dtw_reports, jump_reports;
  int structured = 0;
  for (const auto& s : sc.corpus.samples) {
    if (s.rendered.inflection_points.empty()) continue;
    ++structured;
    const auto& score = sc.corpus.features[s.piece];
    const auto csm = cross_similarity(s.rendered.performance, score);
    const double pr = csm.performance_frame_rate_hz, sr = csm.score_frame_rate_hz;
    const auto truth = beats_from_warpmap(s.rendered.warp, sc.corpus.beats[s.piece], pr, sr);
    if (truth.empty()) continue;
    dtw_reports.push_back(accuracy(dtw(csm), truth, pr, sr, kDefaultThresholdsMs, "dtw"));
    jump_reports.push_back(accuracy(jump_dtw(csm, s.rendered.inflection_points), truth, pr, sr,
                                    kDefaultThresholdsMs, "jumpdtw"));
  }
  if (dtw_reports.empty()) return {false, "no structured samples"};
  const auto d = pool_reports(dtw_reports);
  const auto j = pool_reports(jump_reports);
  const double secs = seconds_since(start) + sc.build_seconds;
  const double jump100 = j.accuracy_percent[2], dtw100 = d.accuracy_percent[2];
  return {jump100 >= 95.0 && dtw100 <= 70.0 && secs < 300.0,
          "100 pieces, " + std::to_string(structured) + " structured performances, " +
              std::to_string(j.total_beats) + " beats; <100ms jumpdtw " + fmt("%.2f%%", jump100) +
              " (need >= 95), dtw " + fmt("%.2f%%", dtw100) + " (need <= 70), " +
              fmt("%.0f s", secs)};
}

double csv_accuracy(const std::string& csv, const std::string& engine, const std::string& column) {
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> names;
  {
    std::istringstream h(header);
    std::string f;
    while (std::getline(h, f, ',')) names.push_back(f);
  }
  const auto col = std::find(names.begin(), names.end(), column) - names.begin();
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream l(line);
    std::string f;
    while (std::getline(l, f, ',')) fields.push_back(f);
    if (fields.size() == names.size() && fields[0] == engine && fields[1] == "all") {
      return std::stod(fields[static_cast<std::size_t>(col)]);
    }
  }
  throw Error("no pooled row for " + engine + " in report");
}

Outcome learning_sanity(const fs::path& work) {
  // Part 1: overfit ten samples with the full-size model.
  cli::CorpusConfig small;
  small.pieces = 2;
  small.dataset.variants_per_piece = 5;
  small.dataset.seed = 606;
  const auto corpus = cli::generate_corpus(small);
  std::vector<neural::TrainingExample> ten;
  for (const auto& s : corpus.samples) {
    std::vector<float> pixels(static_cast<std::size_t>(s.grid.values.size()));
    for (Eigen::Index i = 0; i < s.grid.values.size(); ++i) {
      pixels[static_cast<std::size_t>(i)] = static_cast<float>(s.grid.values.data()[i]);
    }
    ten.push_back({std::move(pixels), s.target});
  }
  neural::DilatedCnn<float> model(neural::ModelConfig{}, 42);
  neural::TrainConfig tc;
  tc.epochs = 200;
  tc.patience = 0;
  tc.on_epoch = [](const neural::EpochRecord& r) {
    if (r.epoch % 20 == 0) std::cerr << "  [6] overfit epoch " << r.epoch << " loss " << r.train_loss << '\n';
  };
  const auto result = neural::train(model, ten, ten, tc);
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& r : result.history) {
    if (r.train_loss < best) {
      best = r.train_loss;
      best_epoch = r.epoch;
    }
  }
  const bool overfit = best < 1e-3;

  // Part 2: 200-sample corpus through the command-line pipeline.
  const fs::path dir = work / "criterion6";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const std::string data = (dir / "data").string();
  bool directional = false;
  std::string part2;
  if (run_cli({"gen", "--out-dir", data, "--pieces", "40", "--variants", "5", "--seed", "42"}, log) !=
          0 ||
      run_cli({"train", "--manifest", data + "/manifest.jsonl", "--out-dir",
               (dir / "model").string(), "--seed", "42"},
              log) != 0 ||
      run_cli({"eval", "--manifest", data + "/manifest.jsonl", "--checkpoint",
               (dir / "model" / "model.dcnn").string(), "--split", "validation",
               "--structured-only", "--out-dir", (dir / "eval").string()},
              log) != 0) {
    part2 = "pipeline failed, see " + log.string();
  } else {
    const std::string csv = io::read_text_file(dir / "eval" / "report.csv");
    const double j = csv_accuracy(csv, "jumpdtw", "acc_100ms");
    const double d = csv_accuracy(csv, "dtw", "acc_100ms");
    directional = j > d;
    part2 = "200-sample corpus, validation structured split: <100ms jumpdtw(predicted) " +
            fmt("%.2f%%", j) + " vs dtw " + fmt("%.2f%%", d);
  }
  return {overfit && directional,
          "10-sample overfit: best training loss " + fmt("%.3g", best) + " at epoch " +
              std::to_string(best_epoch) + " (need < 1e-3); " + part2};
}

Outcome receptive_field_ordering() {
  neural::ModelConfig dil;  // S = 128, channels 16/32/64
  dil.fc_sizes = {16, 16};  // the fully connected head does not affect conv receptive fields
  neural::ModelConfig plain = dil;
  plain.dilation_layer2 = plain.dilation_layer3 = 1;
  const int y = 8, x = 8;  // centre of the 16 x 16 layer-3 map
  const neural::DilatedCnn<double> dmodel(dil, 77), pmodel(plain, 77);
  const auto gd = receptive::gradient_mask_union(dmodel, 3, y, x, 24, 707);
  const auto gp = receptive::gradient_mask_union(pmodel, 3, y, x, 24, 708);
  const auto sd = neural::receptive_field_mask(dil, 3, y, x);
  const auto sp = neural::receptive_field_mask(plain, 3, y, x);
  const bool ordered = receptive::strict_subset(gp, gd);
  const bool within = receptive::subset(gd, sd) && receptive::subset(gp, sp);
  return {ordered && within,
          dil.name() + " layer 3 gradient mask " + std::to_string(receptive::count(gd)) +
              " px (structural " + std::to_string(receptive::count(sd)) + "), " + plain.name() +
              " " + std::to_string(receptive::count(gp)) + " px (structural " +
              std::to_string(receptive::count(sp)) + "), strict containment " +
              (ordered ? "holds" : "fails")};
}

std::map<std::string, io::Bytes> tree_bytes(const fs::path& root) {
  std::map<std::string, io::Bytes> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "log.txt") continue;
    out[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
  }
  return out;
}

Outcome determinism(const fs::path& work) {
  const fs::path base = work / "criterion8";
  fs::remove_all(base);
  for (const char* run : {"run1", "run2"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir);
    const fs::path log = dir / "log.txt";
    const std::string data = (dir / "data").string();
    const std::string ckpt = (dir / "model" / "model.dcnn").string();
    int rc = run_cli({"gen", "--out-dir", data, "--pieces", "5", "--seed", "8", "--min-segment", "30"}, log);
    rc = rc ? rc
            : run_cli({"train", "--manifest", data + "/manifest.jsonl", "--out-dir",
                       (dir / "model").string(), "--epochs", "2", "--batch", "8", "--input-size",
                       "32", "--channels", "4,8,8", "--fc-sizes", "32,32", "--seed", "8"},
                      log);
    const auto records = cli::read_manifest(data + "/manifest.jsonl");
    const auto& r = records.at(3);
    const std::string score = data + "/" + r.score;
    const std::string perf = data + "/" + r.performance;
    rc = rc ? rc
            : run_cli({"predict", "--checkpoint", ckpt, "--score", score, "--performance", perf,
                       "--out-dir", (dir / "predict").string()},
                      log);
    for (const char* engine : {"dtw", "jumpdtw", "nwtw"}) {
      std::vector<std::string> args = {"align", "--score", score, "--performance", perf,
                                       "--engine", engine, "--out-dir",
                                       (dir / "align" / engine).string()};
      if (std::string(engine) == "jumpdtw") {
        args.insert(args.end(), {"--points", (dir / "predict" / "points.json").string()});
      }
      rc = rc ? rc : run_cli(args, log);
    }
    rc = rc ? rc
            : run_cli({"eval", "--manifest", data + "/manifest.jsonl", "--checkpoint", ckpt,
                       "--split", "all", "--out-dir", (dir / "eval").string()},
                      log);
    rc = rc ? rc
            : run_cli({"eval", "--path", (dir / "align" / "jumpdtw" / "path.csv").string(),
                       "--truth", data + "/" + r.truth, "--out-dir", (dir / "eval_path").string()},
                      log);
    if (rc != 0) return {false, std::string(run) + " pipeline failed, see " + log.string()};
  }
  const auto a = tree_bytes(base / "run1");
  const auto b = tree_bytes(base / "run2");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    differing += it == b.end() || it->second != bytes;
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;
  std::size_t total = 0;
  for (const auto& [name, bytes] : a) total += bytes.size();
  return {differing == 0 && !a.empty(),
          "gen/train/predict/align/eval twice: " + std::to_string(a.size()) + " files, " +
              std::to_string(total) + " bytes, " + std::to_string(differing) + " differ"};
}

template <typename T>
bool same_bits(const T& a, const T& b) {
  return std::memcmp(&a, &b, sizeof(T)) == 0;
}

Outcome format_round_trips(const fs::path& work) {
  const fs::path dir = work / "criterion9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(9009);
  std::vector<std::string> failed;
  int cases = 0;

  for (int t = 0; t < 20; ++t, ++cases) {
    FeatureSequence seq;
    seq.frame_rate_hz = uniform_real(rng, 5.0, 100.0);
    seq.vectors.resize(uniform_int(rng, 0, 40), 12);
    for (Eigen::Index i = 0; i < seq.vectors.size(); ++i) {
      seq.vectors.data()[i] = static_cast<float>(uniform01(rng));
    }
    const auto bytes = encode_fseq(seq);
    write_fseq(dir / "x.fseq", seq);
    const auto back = read_fseq(dir / "x.fseq");
    bool ok = back.vectors.rows() == seq.vectors.rows() && back.vectors == seq.vectors &&
              same_bits(back.frame_rate_hz, seq.frame_rate_hz) && encode_fseq(back) == bytes &&
              io::read_file(dir / "x.fseq") == bytes;
    if (!ok) failed.push_back("FSEQ1");
  }

  for (int t = 0; t < 20; ++t, ++cases) {
    CrossSimilarityMatrix csm;
    csm.performance_frame_rate_hz = uniform_real(rng, 5.0, 100.0);
    csm.score_frame_rate_hz = uniform_real(rng, 5.0, 100.0);
    csm.values.resize(uniform_int(rng, 1, 30), uniform_int(rng, 1, 30));
    for (Eigen::Index i = 0; i < csm.values.size(); ++i) {
      csm.values.data()[i] = static_cast<float>(uniform_real(rng, 0.0, 1.5));
    }
    const auto bytes = encode_csm(csm);
    write_csm(dir / "x.csm", csm);
    const auto back = read_csm(dir / "x.csm");
    bool ok = back.values.rows() == csm.values.rows() && back.values == csm.values &&
              same_bits(back.performance_frame_rate_hz, csm.performance_frame_rate_hz) &&
              same_bits(back.score_frame_rate_hz, csm.score_frame_rate_hz) &&
              encode_csm(back) == bytes && io::read_file(dir / "x.csm") == bytes;
    if (!ok) failed.push_back("CSM1");
  }

  for (int t = 0; t < 3; ++t, ++cases) {
    neural::ModelConfig cfg;
    cfg.input_size = 32;
    cfg.channels = {2 + t, 4, 4};
    cfg.fc_sizes = {16, 8};
    cfg.dilation_layer3 = 2 + t % 2;
    neural::DilatedCnn<float> model(cfg, 100 + t);
    neural::Grid4<float> x(3, 1, 32, 32);
    for (float& v : x.data) v = static_cast<float>(uniform01(rng));
    model.forward(x, neural::Mode::train, rng);  // moves the batch-norm buffers
    const auto ckpt = neural::ModelCheckpoint::from_model(model, t, uniform01(rng));
    const auto bytes = neural::encode_checkpoint(ckpt);
    neural::write_checkpoint(dir / "x.dcnn", ckpt);
    const auto back = neural::read_checkpoint(dir / "x.dcnn");
    const auto restored = back.to_model();
    bool ok = neural::encode_checkpoint(back) == bytes && io::read_file(dir / "x.dcnn") == bytes &&
              same_bits(back.best_validation_loss, ckpt.best_validation_loss);
    for (std::size_t p = 0; ok && p < model.parameters().size(); ++p) {
      ok = restored.parameters()[p].data == model.parameters()[p].data;
    }
    for (std::size_t p = 0; ok && p < model.buffers().size(); ++p) {
      ok = restored.buffers()[p].data == model.buffers()[p].data;
    }
    ok = ok && restored.infer(x).data == model.infer(x).data;
    if (!ok) failed.push_back("DCNN1");
  }

  for (int t = 0; t < 20; ++t, ++cases) {
    const int rows = uniform_int(rng, 1, 30), cols = uniform_int(rng, 1, 30);
    const RowMatrix e = oracle::random_matrix(rng, rows, cols);
    const auto pts = oracle::random_points(rng, rows, cols, uniform_int(rng, 0, 6));
    const AlignmentPath path =
        t % 3 == 0 ? nwtw_align(e, {0.3}) : (t % 3 == 1 ? jump_dtw(e, pts) : dtw(e));
    write_path_csv(dir / "x.csv", path);
    const auto back = read_path_csv(dir / "x.csv");
    bool ok = back.cells == path.cells && same_bits(back.total_cost, path.total_cost) &&
              back.jump_positions == path.jump_positions && path_to_csv(back) == path_to_csv(path);
    if (!ok) failed.push_back("path CSV");
  }

  std::set<std::string> kinds(failed.begin(), failed.end());
  std::string which;
  for (const auto& k : kinds) which += " " + k;
  return {failed.empty(), "FSEQ1, CSM1, DCNN1 and path CSV over " + std::to_string(cases) +
                              " cases, " + std::to_string(failed.size()) + " failures" +
                              (which.empty() ? "" : ":" + which)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the structalign toolkit", "acceptance"};
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria (1-9)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::absolute(work_dir);
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "DP-oracle equivalence", dp_oracle_equivalence},
      {2, "dilated-kernel equivalence", dilated_kernel_equivalence},
      {3, "gradient checks", gradient_checks},
      {4, "jump-cost dominance", jump_cost_dominance},
      {5, "oracle-points structural recovery", oracle_points_recovery},
      {6, "learning sanity", [&] { return learning_sanity(work); }},
      {7, "receptive-field ordering", receptive_field_ordering},
      {8, "determinism", [&] { return determinism(work); }},
      {9, "format round-trips", [&] { return format_round_trips(work); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    std::cerr << "running criterion " << c.id << " (" << c.name << ")\n";
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": "
              << o.detail << fmt(" [%.1f s]", seconds_since(start)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
