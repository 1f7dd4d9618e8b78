#pragma once

// Conversion between inflection-point lists and the 64-float regression
// target, plus the L2 loss.

#include <span>
#include <vector>

#include "structalign/inflection.hpp"

namespace structalign::neural {

inline constexpr int kTargetSize = 2 * kMaxInflectionPoints;
inline constexpr double kDefaultMergeEpsilon = 0.02;

// Coordinates normalized by (p - 1) and (q - 1), interleaved x0, y0, x1, y1,
// ...; unused slots hold the (1, 1) end-of-path sentinel.
std::vector<float> encode_targets(const InflectionPointList& points, int p, int q);

// Clamps to [0, 1], drops trailing sentinels (Chebyshev distance to (1, 1) at
// most merge_epsilon), sorts by x and maps to frames. The result is made
// usable as jump_dtw input: an odd trailing point is dropped, and a jump
// target that would not come after its source in row-major order is moved
// one performance frame later (or the pair dropped at the matrix edge).
InflectionPointList decode_predictions(std::span<const float> output, int p, int q,
                                       double merge_epsilon = kDefaultMergeEpsilon);

// Mean squared error.
double l2_loss(std::span<const float> prediction, std::span<const float> target);
double l2_loss(std::span<const double> prediction, std::span<const double> target);

}  // namespace structalign::neural
