#pragma once

#include <Eigen/Core>

namespace structalign {

// Row-major dense matrix used for feature sequences, distance grids and
// piano rolls. Row index is always time.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace structalign
