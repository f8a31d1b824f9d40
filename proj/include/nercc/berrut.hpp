#pragma once

#include <span>
#include <vector>

#include "nercc/types.hpp"

namespace nercc {

/// Berrut's first-form rational interpolant
///   b(x) = sum_j (-1)^j y_j / (x - t_j) / sum_j (-1)^j / (x - t_j),
/// with signs assigned by ascending rank of the supplied nodes. The
/// interpolant has no real poles for any strictly increasing node set.
class BerrutInterpolant {
 public:
  /// Queries closer than this to a node return that node's value.
  static constexpr double kNodeSnap = 1e-12;

  BerrutInterpolant(std::vector<double> nodes, Matrix values);

  Matrix evaluate(std::span<const double> queries) const;

  std::span<const double> nodes() const noexcept { return nodes_; }
  const Matrix& values() const noexcept { return values_; }

 private:
  std::vector<double> nodes_;
  Matrix values_;
};

}  // namespace nercc
