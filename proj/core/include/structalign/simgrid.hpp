#pragma once

// Frame-pairwise distance grids and their fixed-size network view.

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "structalign/features.hpp"
#include "structalign/matrix.hpp"

namespace structalign {

// values(m, n) = ||x_m - y_n||_2. Rows are performance frames, columns score
// frames.
struct CrossSimilarityMatrix {
  RowMatrix values;
  double performance_frame_rate_hz = kDefaultFrameRate;
  double score_frame_rate_hz = kDefaultFrameRate;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Square, min-max normalized view of a CrossSimilarityMatrix.
struct NetworkInputGrid {
  RowMatrix values;  // [size x size], entries in [0, 1]
  int source_rows = 0;  // p
  int source_cols = 0;  // q

  int size() const { return static_cast<int>(values.rows()); }
  double scale_x() const { return static_cast<double>(source_rows) / size(); }
  double scale_y() const { return static_cast<double>(source_cols) / size(); }
};

inline constexpr int kDefaultInputSize = 128;

CrossSimilarityMatrix cross_similarity(const FeatureSequence& performance,
                                       const FeatureSequence& score);

// Area-average downsampling (bilinear upsampling on axes shorter than `size`)
// followed by min-max normalization over the whole grid. A constant grid maps
// to zeros.
NetworkInputGrid to_network_input(const CrossSimilarityMatrix& matrix,
                                  int size = kDefaultInputSize);
NetworkInputGrid to_network_input(const RowMatrix& values, int size = kDefaultInputSize);

// 1-D resampling operator used on each axis by to_network_input.
std::vector<double> resample_axis(std::span<const double> src, int dst_len);

// Normalized [0,1]^2 coordinates -> (performance frame, score frame), rounded
// and clamped.
std::pair<int, int> grid_coords_to_frames(double x, double y, int rows, int cols);
std::pair<int, int> grid_coords_to_frames(std::pair<double, double> point,
                                          const NetworkInputGrid& grid);
std::pair<double, double> frames_to_grid_coords(int m, int n, int rows, int cols);

// CSM1: "CSM1", u32 rows, u32 cols, f64 performance rate, f64 score rate,
// row-major f32.
std::vector<std::uint8_t> encode_csm(const CrossSimilarityMatrix& csm);
CrossSimilarityMatrix decode_csm(std::span<const std::uint8_t> bytes);
void write_csm(const std::filesystem::path& path, const CrossSimilarityMatrix& csm);
CrossSimilarityMatrix read_csm(const std::filesystem::path& path);

// Binary PGM (P5), 8-bit, value range mapped linearly onto [0, 255].
std::vector<std::uint8_t> encode_pgm(const RowMatrix& values);

}  // namespace structalign
