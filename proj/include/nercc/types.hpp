#pragma once

#include <Eigen/Dense>

namespace nercc {

/// Dense real matrix. Rows are points, columns are coordinates.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace nercc
