#pragma once

#include <vector>

namespace structalign {

// (performance frame, score frame). In a chronological list, odd entries
// (1-based) end a synchronous subpath and even entries begin the next one.
struct InflectionPoint {
  int performance_frame = 0;
  int score_frame = 0;

  friend bool operator==(const InflectionPoint&, const InflectionPoint&) = default;
};

using InflectionPointList = std::vector<InflectionPoint>;

inline constexpr int kMaxInflectionPoints = 32;

}  // namespace structalign
