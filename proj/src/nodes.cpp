#include "nercc/nodes.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "nercc/error.hpp"

namespace nercc {

NodeSet::NodeSet(std::vector<double> values, NodeKind kind)
    : values_(std::move(values)), kind_(kind) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
      throw Error(ErrorCode::InvariantViolation, "node outside [-1, 1]");
    }
    if (kind_ == NodeKind::First && (v == -1.0 || v == 1.0)) {
      throw Error(ErrorCode::InvariantViolation, "first-kind nodes must be interior");
    }
    if (i > 0 && !(values_[i - 1] < v)) {
      throw Error(ErrorCode::InvariantViolation, "nodes must be strictly increasing");
    }
  }
}

// Both families are evaluated through the sine form cos(pi/2 - x) so that
// the sets are exactly symmetric about zero and the midpoint is exactly 0.
NodeSet alpha_points(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidNodeCount, "alpha_points needs K >= 1");
  std::vector<double> v(k);
  const auto kk = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    // Ascending index i corresponds to the formula's k = K - i.
    const double numer = 2.0 * static_cast<double>(i) + 1.0 - kk;
    v[i] = std::sin(std::numbers::pi * numer / (2.0 * kk));
  }
  return NodeSet(std::move(v), NodeKind::First);
}

NodeSet beta_points(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidNodeCount, "beta_points needs N >= 2");
  std::vector<double> v(n);
  const auto nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double numer = 2.0 * static_cast<double>(i) + 1.0 - nn;
    v[i] = std::sin(std::numbers::pi * numer / (2.0 * (nn - 1.0)));
  }
  return NodeSet(std::move(v), NodeKind::Second);
}

}  // namespace nercc
