#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cli/corpus.hpp"
#include "structalign/align.hpp"
#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"
#include "structalign/eval.hpp"
#include "structalign/neural/checkpoint.hpp"
#include "structalign/neural/targets.hpp"
#include "structalign/neural/train.hpp"
#include "structalign/simgrid.hpp"

namespace structalign::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
int guarded(const char* name, std::ostream& log, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const UsageError& e) {
    log << "structalign " << name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "structalign " << name << ": error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(p)) throw UsageError(std::string(flag) + ": no such file: " + p.string());
}

void require_out_dir(const fs::path& p) {
  if (p.empty()) throw UsageError("--out-dir is required");
  if (fs::exists(p) && !fs::is_directory(p)) {
    throw UsageError("--out-dir exists and is not a directory: " + p.string());
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    T v{};
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError(std::string(flag) + ": bad value \"" + item + "\" in \"" + text + "\"");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

template <std::size_t N>
std::array<int, N> parse_ints(const std::string& text, const char* flag) {
  const auto v = parse_list<int>(text, flag);
  if (v.size() != N) {
    throw UsageError(std::string(flag) + " expects " + std::to_string(N) + " comma-separated values");
  }
  std::array<int, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

CrossSimilarityMatrix load_pair(const fs::path& score, const fs::path& performance) {
  return cross_similarity(read_fseq(performance), read_fseq(score));
}

neural::ModelConfig model_config(const ModelOptions& m) {
  neural::ModelConfig c;
  c.input_size = m.input_size;
  c.dilation_layer2 = m.dilations[0];
  c.dilation_layer3 = m.dilations[1];
  c.channels = m.channels;
  c.fc_sizes = m.fc_sizes;
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::vector<float> grid_pixels(const NetworkInputGrid& grid) {
  std::vector<float> out(static_cast<std::size_t>(grid.values.size()));
  for (Eigen::Index i = 0; i < grid.values.size(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<float>(grid.values.data()[i]);
  }
  return out;
}

InflectionPointList predict_points(const neural::DilatedCnn<float>& model,
                                   const CrossSimilarityMatrix& csm) {
  const NetworkInputGrid grid = to_network_input(csm, model.config().input_size);
  const std::vector<float> out = model.infer(grid);
  return neural::decode_predictions(out, static_cast<int>(csm.rows()),
                                    static_cast<int>(csm.cols()));
}

}  // namespace

int cmd_gen(const GenOptions& o, std::ostream& log) {
  return guarded("gen", log, [&] {
    require_out_dir(o.out_dir);
    if (o.pieces < 1) throw UsageError("--pieces must be >= 1");
    if (o.variants < 1) throw UsageError("--variants must be >= 1");
    if (o.noise < 0.0) throw UsageError("--noise must be >= 0");

    CorpusConfig cfg;
    cfg.pieces = o.pieces;
    cfg.dataset.variants_per_piece = o.variants;
    cfg.dataset.seed = o.seed;
    cfg.dataset.noise_std = o.noise;
    cfg.dataset.plan.jump_prob = o.jump_prob;
    cfg.dataset.plan.min_segment_frames = o.min_segment_frames;
    const Corpus corpus = generate_corpus(cfg);

    fs::create_directories(o.out_dir / "scores");
    fs::create_directories(o.out_dir / "samples");
    for (int p = 0; p < o.pieces; ++p) {
      io::write_file(o.out_dir / "scores" / (piece_id(p) + ".mid"), write_midi(corpus.scores[p]));
      write_fseq(o.out_dir / "scores" / (piece_id(p) + ".fseq"), corpus.features[p]);
    }
    std::string manifest;
    for (const auto& s : corpus.samples) {
      ManifestRecord r;
      r.id = sample_id(s.piece, s.variant);
      r.piece = s.piece;
      r.variant = s.variant;
      r.split = s.split;
      r.score = "scores/" + piece_id(s.piece) + ".fseq";
      r.performance = "samples/" + r.id + ".fseq";
      r.truth = "samples/" + r.id + ".truth.json";
      r.target = s.target;
      r.points = s.rendered.inflection_points;
      r.plan = s.plan.describe();
      write_fseq(o.out_dir / r.performance, s.rendered.performance);
      GroundTruth t;
      t.warp = s.rendered.warp;
      t.points = s.rendered.inflection_points;
      t.score_beats = corpus.beats[s.piece];
      t.performance_rate = s.rendered.performance.frame_rate_hz;
      t.score_rate = corpus.features[s.piece].frame_rate_hz;
      write_json_file(o.out_dir / r.truth, truth_to_json(t));
      manifest += manifest_line(r);
    }
    io::write_text_file(o.out_dir / "manifest.jsonl", manifest);
    log << "wrote " << corpus.samples.size() << " samples from " << o.pieces << " pieces to "
        << o.out_dir.string() << '\n';
  });
}

int cmd_train(const TrainOptions& o, std::ostream& log) {
  return guarded("train", log, [&] {
    require_file(o.manifest, "--manifest");
    require_out_dir(o.out_dir);
    if (o.epochs < 0) throw UsageError("--epochs must be >= 0");
    if (o.batch_size < 1) throw UsageError("--batch must be >= 1");
    if (!(o.learning_rate > 0.0)) throw UsageError("--lr must be > 0");
    const neural::ModelConfig config = model_config(o.model);

    const fs::path root = o.manifest.parent_path();
    const auto records = read_manifest(o.manifest);
    std::map<std::string, FeatureSequence> scores;
    std::vector<neural::TrainingExample> train_set;
    std::vector<neural::TrainingExample> val_set;
    for (const auto& r : records) {
      auto it = scores.find(r.score);
      if (it == scores.end()) it = scores.emplace(r.score, read_fseq(root / r.score)).first;
      const CrossSimilarityMatrix csm = cross_similarity(read_fseq(root / r.performance), it->second);
      neural::TrainingExample ex{grid_pixels(to_network_input(csm, config.input_size)), r.target};
      (r.split == Split::train ? train_set : val_set).push_back(std::move(ex));
    }
    log << "training " << config.name() << " on " << train_set.size() << " samples, validating on "
        << val_set.size() << '\n';

    neural::DilatedCnn<float> model(config, o.seed);
    neural::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.learning_rate = o.learning_rate;
    tc.patience = o.patience;
    tc.seed = splitmix64(o.seed);
    tc.on_epoch = [&log](const neural::EpochRecord& r) {
      log << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val_loss
          << '\n';
    };
    const neural::TrainResult result = neural::train(model, train_set, val_set, tc);

    fs::create_directories(o.out_dir);
    neural::write_checkpoint(o.out_dir / "model.dcnn", result.checkpoint);
    io::write_text_file(o.out_dir / "train_log.csv", neural::training_log_csv(result.history));
    log << "best validation loss " << result.checkpoint.best_validation_loss << " at epoch "
        << result.checkpoint.epoch << (result.stopped_early ? " (stopped early)" : "") << '\n';
  });
}

int cmd_predict(const PredictOptions& o, std::ostream& log) {
  return guarded("predict", log, [&] {
    require_file(o.checkpoint, "--checkpoint");
    require_file(o.score, "--score");
    require_file(o.performance, "--performance");
    require_out_dir(o.out_dir);
    const neural::DilatedCnn<float> model = neural::read_checkpoint(o.checkpoint).to_model();
    const CrossSimilarityMatrix csm = load_pair(o.score, o.performance);
    const InflectionPointList points = predict_points(model, csm);
    fs::create_directories(o.out_dir);
    write_json_file(o.out_dir / "points.json",
                    points_to_json(points, static_cast<int>(csm.rows()),
                                   static_cast<int>(csm.cols())));
    log << "predicted " << points.size() << " inflection points\n";
  });
}

int cmd_align(const AlignOptions& o, std::ostream& log) {
  return guarded("align", log, [&] {
    require_file(o.score, "--score");
    require_file(o.performance, "--performance");
    require_out_dir(o.out_dir);
    if (o.engine != "dtw" && o.engine != "jumpdtw" && o.engine != "nwtw") {
      throw UsageError("--engine must be dtw, jumpdtw or nwtw");
    }
    if (o.points && o.engine != "jumpdtw") throw UsageError("--points only applies to jumpdtw");
    if (o.points) require_file(*o.points, "--points");
    if (!(o.gamma >= 0.0)) throw UsageError("--gamma must be >= 0");

    const CrossSimilarityMatrix csm = load_pair(o.score, o.performance);
    AlignmentPath path;
    if (o.engine == "dtw") {
      path = dtw(csm);
    } else if (o.engine == "jumpdtw") {
      const InflectionPointList points =
          o.points ? points_from_json(read_json_file(*o.points)) : InflectionPointList{};
      path = jump_dtw(csm, points);
    } else {
      path = nwtw_align(csm, NwtwParams{o.gamma});
    }
    fs::create_directories(o.out_dir);
    write_path_csv(o.out_dir / "path.csv", path);
    io::write_file(o.out_dir / "path.pgm", encode_path_overlay(csm.values, path));
    log << o.engine << ": " << path.cells.size() << " cells, cost " << path.total_cost << ", "
        << path.jump_positions.size() << " jumps\n";
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& log) {
  return guarded("eval", log, [&] {
    require_out_dir(o.out_dir);
    if (o.manifest.has_value() == (o.path.has_value() || o.truth.has_value())) {
      throw UsageError("give either --manifest or both --path and --truth");
    }
    if (o.thresholds_ms.empty()) throw UsageError("--thresholds is empty");
    for (double t : o.thresholds_ms) {
      if (!(t >= 0.0)) throw UsageError("--thresholds must be >= 0");
    }
    std::vector<AccuracyReport> reports;

    if (o.path) {
      if (!o.truth) throw UsageError("--path needs --truth");
      require_file(*o.path, "--path");
      require_file(*o.truth, "--truth");
      const GroundTruth truth = truth_from_json(read_json_file(*o.truth));
      const BeatAnnotation beats = beats_from_warpmap(truth.warp, truth.score_beats,
                                                      truth.performance_rate, truth.score_rate);
      reports.push_back(accuracy(read_path_csv(*o.path), beats, truth.performance_rate,
                                 truth.score_rate, o.thresholds_ms, o.engine,
                                 o.path->stem().string()));
    } else {
      require_file(*o.manifest, "--manifest");
      if (o.checkpoint) require_file(*o.checkpoint, "--checkpoint");
      if (o.split != "train" && o.split != "validation" && o.split != "all") {
        throw UsageError("--split must be train, validation or all");
      }
      std::optional<neural::DilatedCnn<float>> model;
      if (o.checkpoint) model.emplace(neural::read_checkpoint(*o.checkpoint).to_model());

      const fs::path root = o.manifest->parent_path();
      std::map<std::string, std::vector<AccuracyReport>> per_engine;
      std::map<std::string, FeatureSequence> scores;
      for (const auto& r : read_manifest(*o.manifest)) {
        if (o.split != "all" && o.split != split_name(r.split)) continue;
        if (o.structured_only && r.points.empty()) continue;
        auto it = scores.find(r.score);
        if (it == scores.end()) it = scores.emplace(r.score, read_fseq(root / r.score)).first;
        const CrossSimilarityMatrix csm =
            cross_similarity(read_fseq(root / r.performance), it->second);
        const GroundTruth truth = truth_from_json(read_json_file(root / r.truth));
        const BeatAnnotation beats = beats_from_warpmap(
            truth.warp, truth.score_beats, csm.performance_frame_rate_hz, csm.score_frame_rate_hz);
        if (beats.empty()) continue;
        const InflectionPointList points = model ? predict_points(*model, csm) : truth.points;
        EngineParams params;
        params.nwtw.gamma = o.gamma;
        params.thresholds_ms = o.thresholds_ms;
        params.piece = r.id;
        for (auto& rep : compare_engines(csm, points, beats, params)) {
          per_engine[rep.engine].push_back(std::move(rep));
        }
      }
      if (per_engine.empty()) throw Error("no samples selected from the manifest");
      for (const auto& [engine, reps] : per_engine) reports.push_back(pool_reports(reps));
    }

    for (const auto& r : reports) r.check();
    fs::create_directories(o.out_dir);
    io::write_text_file(o.out_dir / "report.txt", format_table(reports));
    io::write_text_file(o.out_dir / "report.csv", reports_to_csv(reports));
    log << format_table(reports);
  });
}

int run(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Structure-aware audio-to-score alignment toolkit", "structalign"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic structured dataset");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--pieces", gen.pieces, "Number of procedural pieces");
  gen_cmd->add_option("--variants", gen.variants, "Performances per piece (first is unaltered)");
  gen_cmd->add_option("--seed", seed, "Random seed");
  gen_cmd->add_option("--noise", gen.noise, "Gaussian noise std on chroma");
  gen_cmd->add_option("--jump-prob", gen.jump_prob, "Chance of a forward skip per repeat");
  gen_cmd->add_option("--min-segment", gen.min_segment_frames, "Minimum segment length in frames");

  TrainOptions train;
  std::string train_dilations = "2,3";
  std::string train_channels = "16,32,64";
  std::string train_fc = "4096,1024";
  auto* train_cmd = app.add_subcommand("train", "Train the inflection-point regressor");
  train_cmd->add_option("--manifest", train.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory")->required();
  train_cmd->add_option("--epochs", train.epochs, "Maximum epochs");
  train_cmd->add_option("--batch", train.batch_size, "Batch size");
  train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
  train_cmd->add_option("--patience", train.patience, "Early-stopping patience (0 disables)");
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--input-size", train.model.input_size, "Network input size S");
  train_cmd->add_option("--dilations", train_dilations, "Dilation of conv layers 2 and 3, m,n");
  train_cmd->add_option("--channels", train_channels, "Conv channels c1,c2,c3");
  train_cmd->add_option("--fc-sizes", train_fc, "Hidden fully connected sizes");

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict inflection points for a pair");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "DCNN1 checkpoint")->required();
  predict_cmd->add_option("--score", predict.score, "Score FSEQ1")->required();
  predict_cmd->add_option("--performance", predict.performance, "Performance FSEQ1")->required();
  predict_cmd->add_option("--out-dir", predict.out_dir, "Output directory")->required();

  AlignOptions align;
  std::string align_points;
  auto* align_cmd = app.add_subcommand("align", "Align a performance to a score");
  align_cmd->add_option("--score", align.score, "Score FSEQ1")->required();
  align_cmd->add_option("--performance", align.performance, "Performance FSEQ1")->required();
  align_cmd->add_option("--engine", align.engine, "dtw | jumpdtw | nwtw");
  align_cmd->add_option("--points", align_points, "Inflection points JSON (jumpdtw)");
  align_cmd->add_option("--gamma", align.gamma, "Gap penalty (nwtw)");
  align_cmd->add_option("--out-dir", align.out_dir, "Output directory")->required();

  EvalOptions eval;
  std::string eval_manifest, eval_checkpoint, eval_path, eval_truth;
  std::string thresholds = "25,50,100,200";
  auto* eval_cmd = app.add_subcommand("eval", "Beat accuracy reports");
  eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest (compares all engines)");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Use model points for jumpdtw");
  eval_cmd->add_option("--split", eval.split, "train | validation | all");
  eval_cmd->add_flag("--structured-only", eval.structured_only,
                     "Skip performances without structural changes");
  eval_cmd->add_option("--path", eval_path, "Path CSV to score");
  eval_cmd->add_option("--truth", eval_truth, "Ground-truth JSON for --path");
  eval_cmd->add_option("--engine", eval.engine, "Label for the --path report");
  eval_cmd->add_option("--thresholds", thresholds, "Thresholds in ms");
  eval_cmd->add_option("--gamma", eval.gamma, "Gap penalty (nwtw)");
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();

  std::vector<const char*> argv;
  argv.push_back("structalign");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream out;
    const int code = app.exit(e, out, out);
    log << out.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.seed = seed;
      return cmd_gen(gen, log);
    }
    if (train_cmd->parsed()) {
      train.seed = seed;
      train.model.dilations = parse_ints<2>(train_dilations, "--dilations");
      train.model.channels = parse_ints<3>(train_channels, "--channels");
      train.model.fc_sizes = parse_ints<2>(train_fc, "--fc-sizes");
      return cmd_train(train, log);
    }
    if (predict_cmd->parsed()) return cmd_predict(predict, log);
    if (align_cmd->parsed()) {
      if (!align_points.empty()) align.points = align_points;
      return cmd_align(align, log);
    }
    if (eval_cmd->parsed()) {
      if (!eval_manifest.empty()) eval.manifest = eval_manifest;
      if (!eval_checkpoint.empty()) eval.checkpoint = eval_checkpoint;
      if (!eval_path.empty()) eval.path = eval_path;
      if (!eval_truth.empty()) eval.truth = eval_truth;
      eval.thresholds_ms = parse_list<double>(thresholds, "--thresholds");
      return cmd_eval(eval, log);
    }
  } catch (const UsageError& e) {
    log << "structalign: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cerr);
}

}  // namespace structalign::cli
