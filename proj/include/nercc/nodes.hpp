#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nercc {

enum class NodeKind { First, Second };

/// Sorted Chebyshev nodes in [-1, 1].
class NodeSet {
 public:
  NodeSet(std::vector<double> values, NodeKind kind);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  NodeKind kind() const noexcept { return kind_; }

 private:
  std::vector<double> values_;
  NodeKind kind_;
};

/// Encoder targets: cos((2k-1)pi/2K), k = 1..K, ascending. Sorted node i is
/// paired with data row i.
NodeSet alpha_points(std::size_t k);

/// Worker nodes: cos((n-1)pi/(N-1)), n = 1..N, ascending; endpoints are -1, 1.
NodeSet beta_points(std::size_t n);

}  // namespace nercc
