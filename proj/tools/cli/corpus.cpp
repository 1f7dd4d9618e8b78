#include "cli/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"
#include "structalign/random.hpp"

namespace structalign::cli {

using nlohmann::json;
using nlohmann::ordered_json;

Corpus generate_corpus(const CorpusConfig& config) {
  if (config.pieces < 1) throw ArgumentError("need at least one piece");
  Corpus corpus;
  for (int p = 0; p < config.pieces; ++p) {
    const MidiScore generated =
        generate_piece(derive_seed(config.dataset.seed, 0x7069656365ULL, p), config.piece);
    MidiScore parsed = parse_midi(write_midi(generated));
    FeatureSequence features = score_features(parsed);
    std::vector<double> beats;
    const double end = static_cast<double>(features.num_frames()) / features.frame_rate_hz;
    for (double b : parsed.beat_times) {
      if (b < end) beats.push_back(b);
    }
    corpus.scores.push_back(std::move(parsed));
    corpus.features.push_back(std::move(features));
    corpus.beats.push_back(std::move(beats));
  }
  corpus.samples = build_dataset(corpus.features, config.dataset);
  return corpus;
}

std::string piece_id(int piece) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%04d", piece);
  return buf;
}

std::string sample_id(int piece, int variant) {
  return piece_id(piece) + "_v" + std::to_string(variant);
}

namespace {

ordered_json pairs_json(const InflectionPointList& points) {
  ordered_json arr = ordered_json::array();
  for (const auto& pt : points) arr.push_back({pt.performance_frame, pt.score_frame});
  return arr;
}

InflectionPointList pairs_from(const json& arr) {
  if (!arr.is_array()) throw ParseError(0, "points must be an array of [perf, score] pairs");
  InflectionPointList out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ParseError(0, "each point must be a pair of integers");
    }
    out.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return out;
}

}  // namespace

ordered_json truth_to_json(const GroundTruth& t) {
  ordered_json j;
  j["performance_rate"] = t.performance_rate;
  j["score_rate"] = t.score_rate;
  j["points"] = pairs_json(t.points);
  j["score_beats"] = t.score_beats;
  j["pass_starts"] = t.warp.pass_starts;
  j["warp"] = t.warp.score_frames;
  return j;
}

GroundTruth truth_from_json(const json& j) {
  try {
    GroundTruth t;
    t.performance_rate = j.at("performance_rate").get<double>();
    t.score_rate = j.at("score_rate").get<double>();
    t.points = pairs_from(j.at("points"));
    t.score_beats = j.at("score_beats").get<std::vector<double>>();
    t.warp.pass_starts = j.at("pass_starts").get<std::vector<int>>();
    t.warp.score_frames = j.at("warp").get<std::vector<int>>();
    return t;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("bad ground-truth record: ") + e.what());
  }
}

std::string manifest_line(const ManifestRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["piece"] = r.piece;
  j["variant"] = r.variant;
  j["split"] = split_name(r.split);
  j["score"] = r.score;
  j["performance"] = r.performance;
  j["truth"] = r.truth;
  j["plan"] = r.plan;
  j["points"] = pairs_json(r.points);
  j["target"] = r.target;
  return j.dump() + '\n';
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ManifestRecord r;
      r.id = j.at("id").get<std::string>();
      r.piece = j.at("piece").get<int>();
      r.variant = j.at("variant").get<int>();
      const std::string split = j.at("split").get<std::string>();
      if (split == "train") {
        r.split = Split::train;
      } else if (split == "validation") {
        r.split = Split::validation;
      } else {
        throw ParseError(start, "unknown split \"" + split + "\"");
      }
      r.score = j.at("score").get<std::string>();
      r.performance = j.at("performance").get<std::string>();
      r.truth = j.at("truth").get<std::string>();
      r.plan = j.value("plan", "");
      r.points = pairs_from(j.at("points"));
      r.target = j.at("target").get<std::vector<float>>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(start, std::string("bad manifest line: ") + e.what());
    }
  }
  return out;
}

ordered_json points_to_json(const InflectionPointList& points, int p, int q) {
  ordered_json j;
  j["performance_frames"] = p;
  j["score_frames"] = q;
  j["points"] = pairs_json(points);
  return j;
}

InflectionPointList points_from_json(const json& j) {
  if (j.is_array()) return pairs_from(j);
  if (j.is_object() && j.contains("points")) return pairs_from(j["points"]);
  throw ParseError(0, "expected a points array or an object with \"points\"");
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = io::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  io::write_text_file(path, j.dump(1) + '\n');
}

}  // namespace structalign::cli
