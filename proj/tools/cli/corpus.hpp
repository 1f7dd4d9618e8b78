#pragma once

// On-disk layout shared by the subcommands: a JSON-lines manifest next to
// scores/ and samples/ directories holding FSEQ1 files and per-sample ground
// truth.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "structalign/eval.hpp"
#include "structalign/features.hpp"
#include "structalign/ingest.hpp"
#include "structalign/structgen.hpp"

namespace structalign::cli {

struct CorpusConfig {
  int pieces = 50;
  DatasetConfig dataset;
  PieceConfig piece;
};

struct Corpus {
  std::vector<MidiScore> scores;  // as parsed back from the written MIDI
  std::vector<FeatureSequence> features;
  std::vector<std::vector<double>> beats;  // score beat times per piece
  std::vector<DatasetSample> samples;
};

// Procedural pieces -> MIDI bytes -> parsed score -> chroma -> dataset.
Corpus generate_corpus(const CorpusConfig& config);

std::string sample_id(int piece, int variant);
std::string piece_id(int piece);

struct GroundTruth {
  WarpMap warp;
  InflectionPointList points;
  std::vector<double> score_beats;
  double performance_rate = kDefaultFrameRate;
  double score_rate = kDefaultFrameRate;
};

nlohmann::ordered_json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);

struct ManifestRecord {
  std::string id;
  int piece = 0;
  int variant = 0;
  Split split = Split::train;
  std::string score;        // relative to the manifest directory
  std::string performance;  // relative
  std::string truth;        // relative
  std::vector<float> target;
  InflectionPointList points;
  std::string plan;
};

std::string manifest_line(const ManifestRecord& record);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// {"performance_frames": p, "score_frames": q, "points": [[a, b], ...]}
nlohmann::ordered_json points_to_json(const InflectionPointList& points, int p, int q);
// Accepts the object above, a ground-truth file, or a bare array of pairs.
InflectionPointList points_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace structalign::cli
