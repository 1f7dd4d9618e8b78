#include "structalign/neural/targets.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "structalign/error.hpp"
#include "structalign/simgrid.hpp"

namespace structalign::neural {

std::vector<float> encode_targets(const InflectionPointList& points, int p, int q) {
  if (points.size() > static_cast<std::size_t>(kMaxInflectionPoints)) {
    throw CapacityError("at most " + std::to_string(kMaxInflectionPoints) +
                        " inflection points fit in a target, got " +
                        std::to_string(points.size()));
  }
  if (p < 1 || q < 1) throw ArgumentError("matrix extent must be positive");
  std::vector<float> out(kTargetSize, 1.0f);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [x, y] =
        frames_to_grid_coords(points[i].performance_frame, points[i].score_frame, p, q);
    out[2 * i] = static_cast<float>(x);
    out[2 * i + 1] = static_cast<float>(y);
  }
  return out;
}

InflectionPointList decode_predictions(std::span<const float> output, int p, int q,
                                       double merge_epsilon) {
  std::vector<std::pair<double, double>> coords;
  for (std::size_t i = 0; i + 1 < output.size(); i += 2) {
    auto clamp01 = [](float v) { return std::isfinite(v) ? std::clamp<double>(v, 0.0, 1.0) : 1.0; };
    coords.emplace_back(clamp01(output[i]), clamp01(output[i + 1]));
  }
  while (!coords.empty()) {
    const auto [x, y] = coords.back();
    if (std::max(1.0 - x, 1.0 - y) > merge_epsilon) break;
    coords.pop_back();
  }
  std::stable_sort(coords.begin(), coords.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  InflectionPointList points;
  for (const auto& c : coords) {
    const auto [m, n] = grid_coords_to_frames(c.first, c.second, p, q);
    points.push_back({m, n});
  }
  if (points.size() % 2 == 1) points.pop_back();

  for (std::size_t i = 1; i < points.size(); i += 2) {
    InflectionPoint& source = points[i - 1];
    InflectionPoint& target = points[i];
    if (i >= 2) source.performance_frame = std::max(source.performance_frame, points[i - 2].performance_frame);
    target.performance_frame = std::max(target.performance_frame, source.performance_frame);
    if (target.performance_frame == source.performance_frame &&
        target.score_frame <= source.score_frame) {
      if (target.performance_frame + 1 >= p) {
        points.resize(i - 1);
        break;
      }
      ++target.performance_frame;
    }
  }
  return points;
}

namespace {

template <typename T>
double mse(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ShapeError("loss", "prediction has " + std::to_string(a.size()) +
                                 " entries, target has " + std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace

double l2_loss(std::span<const float> prediction, std::span<const float> target) {
  return mse(prediction, target);
}

double l2_loss(std::span<const double> prediction, std::span<const double> target) {
  return mse(prediction, target);
}

}  // namespace structalign::neural
