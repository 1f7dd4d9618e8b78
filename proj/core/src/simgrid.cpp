#include "structalign/simgrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"

namespace structalign {

CrossSimilarityMatrix cross_similarity(const FeatureSequence& performance,
                                       const FeatureSequence& score) {
  if (performance.num_frames() == 0 || score.num_frames() == 0) {
    throw ArgumentError("cross_similarity needs non-empty sequences");
  }
  if (performance.dims() != score.dims()) {
    throw ArgumentError("feature dimension mismatch: " + std::to_string(performance.dims()) +
                        " vs " + std::to_string(score.dims()));
  }
  CrossSimilarityMatrix csm;
  csm.performance_frame_rate_hz = performance.frame_rate_hz;
  csm.score_frame_rate_hz = score.frame_rate_hz;
  const Eigen::Index p = performance.num_frames();
  const Eigen::Index q = score.num_frames();
  const Eigen::Index dims = score.dims();
  csm.values.resize(p, q);
  for (Eigen::Index m = 0; m < p; ++m) {
    const double* x = performance.vectors.row(m).data();
    for (Eigen::Index n = 0; n < q; ++n) {
      const double* y = score.vectors.row(n).data();
      double sum = 0.0;
      for (Eigen::Index k = 0; k < dims; ++k) {
        const double d = x[k] - y[k];
        sum += d * d;
      }
      csm.values(m, n) = std::sqrt(sum);
    }
  }
  return csm;
}

std::vector<double> resample_axis(std::span<const double> src, int dst_len) {
  const auto src_len = static_cast<int>(src.size());
  std::vector<double> dst(dst_len, 0.0);
  if (src_len == dst_len) {
    std::copy(src.begin(), src.end(), dst.begin());
  } else if (src_len > dst_len) {
    // Each output cell averages the source interval it covers, with
    // fractional weights at the edges.
    const double ratio = static_cast<double>(src_len) / dst_len;
    for (int i = 0; i < dst_len; ++i) {
      const double lo = i * ratio;
      const double hi = (i + 1) * ratio;
      double acc = 0.0;
      for (int j = static_cast<int>(lo); j < src_len && j < hi; ++j) {
        const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
        if (overlap > 0.0) acc += overlap * src[j];
      }
      dst[i] = acc / ratio;
    }
  } else {
    // Half-pixel-centred bilinear interpolation.
    const double ratio = static_cast<double>(src_len) / dst_len;
    for (int i = 0; i < dst_len; ++i) {
      const double pos = std::clamp((i + 0.5) * ratio - 0.5, 0.0, src_len - 1.0);
      const int j = static_cast<int>(pos);
      const int j1 = std::min(j + 1, src_len - 1);
      const double t = pos - j;
      dst[i] = (1.0 - t) * src[j] + t * src[j1];
    }
  }
  return dst;
}

NetworkInputGrid to_network_input(const RowMatrix& values, int size) {
  if (size <= 0) throw ArgumentError("network input size must be positive");
  if (values.rows() == 0 || values.cols() == 0) {
    throw ArgumentError("cannot resize an empty matrix");
  }
  const auto p = static_cast<int>(values.rows());
  const auto q = static_cast<int>(values.cols());

  RowMatrix by_rows(p, size);
  std::vector<double> line(q);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < q; ++c) line[c] = values(r, c);
    auto out = resample_axis(line, size);
    for (int c = 0; c < size; ++c) by_rows(r, c) = out[c];
  }
  NetworkInputGrid grid;
  grid.source_rows = p;
  grid.source_cols = q;
  grid.values.resize(size, size);
  line.resize(p);
  for (int c = 0; c < size; ++c) {
    for (int r = 0; r < p; ++r) line[r] = by_rows(r, c);
    auto out = resample_axis(line, size);
    for (int r = 0; r < size; ++r) grid.values(r, c) = out[r];
  }

  const double lo = grid.values.minCoeff();
  const double hi = grid.values.maxCoeff();
  if (hi > lo) {
    grid.values = (grid.values.array() - lo) / (hi - lo);
  } else {
    grid.values.setZero();
  }
  return grid;
}

NetworkInputGrid to_network_input(const CrossSimilarityMatrix& matrix, int size) {
  return to_network_input(matrix.values, size);
}

std::pair<int, int> grid_coords_to_frames(double x, double y, int rows, int cols) {
  auto map = [](double v, int len) {
    if (len <= 1 || !std::isfinite(v)) return 0;
    const long idx = std::lround(std::clamp(v, 0.0, 1.0) * (len - 1));
    return static_cast<int>(std::clamp<long>(idx, 0, len - 1));
  };
  return {map(x, rows), map(y, cols)};
}

std::pair<int, int> grid_coords_to_frames(std::pair<double, double> point,
                                          const NetworkInputGrid& grid) {
  return grid_coords_to_frames(point.first, point.second, grid.source_rows, grid.source_cols);
}

std::pair<double, double> frames_to_grid_coords(int m, int n, int rows, int cols) {
  const double x = rows > 1 ? static_cast<double>(m) / (rows - 1) : 0.0;
  const double y = cols > 1 ? static_cast<double>(n) / (cols - 1) : 0.0;
  return {x, y};
}

std::vector<std::uint8_t> encode_csm(const CrossSimilarityMatrix& csm) {
  io::ByteWriter w;
  w.text("CSM1");
  w.u32(static_cast<std::uint32_t>(csm.rows()));
  w.u32(static_cast<std::uint32_t>(csm.cols()));
  w.f64(csm.performance_frame_rate_hz);
  w.f64(csm.score_frame_rate_hz);
  for (Eigen::Index r = 0; r < csm.rows(); ++r) {
    for (Eigen::Index c = 0; c < csm.cols(); ++c) w.f32(static_cast<float>(csm.values(r, c)));
  }
  return std::move(w).take();
}

CrossSimilarityMatrix decode_csm(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("CSM1");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  CrossSimilarityMatrix csm;
  csm.performance_frame_rate_hz = r.f64();
  csm.score_frame_rate_hz = r.f64();
  if (std::uint64_t{rows} * cols * 4 != r.remaining()) {
    throw ParseError(r.offset(), "CSM1 payload size does not match header");
  }
  csm.values.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) csm.values(i, j) = r.f32();
  }
  return csm;
}

void write_csm(const std::filesystem::path& path, const CrossSimilarityMatrix& csm) {
  io::write_file(path, encode_csm(csm));
}

CrossSimilarityMatrix read_csm(const std::filesystem::path& path) {
  return decode_csm(io::read_file(path));
}

std::vector<std::uint8_t> encode_pgm(const RowMatrix& values) {
  const std::string header = "P5\n" + std::to_string(values.cols()) + " " +
                             std::to_string(values.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const double lo = values.size() ? values.minCoeff() : 0.0;
  const double hi = values.size() ? values.maxCoeff() : 0.0;
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * (values(r, c) - lo) / span)));
    }
  }
  return out;
}

}  // namespace structalign
