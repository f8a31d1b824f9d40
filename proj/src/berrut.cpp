#include "nercc/berrut.hpp"

#include <cmath>
#include <utility>

#include "nercc/error.hpp"

namespace nercc {

BerrutInterpolant::BerrutInterpolant(std::vector<double> nodes, Matrix values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.empty()) throw Error(ErrorCode::TooFewPoints, "Berrut interpolation needs >= 1 node");
  if (static_cast<Eigen::Index>(nodes_.size()) != values_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "node count does not match value rows");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw Error(ErrorCode::NonFiniteInput, "node is not finite");
    if (i > 0 && !(nodes_[i - 1] < nodes_[i])) {
      throw Error(ErrorCode::NonIncreasingKnots, "Berrut nodes must be strictly increasing");
    }
  }
  if (!values_.allFinite()) throw Error(ErrorCode::NonFiniteInput, "values must be finite");
}

Matrix BerrutInterpolant::evaluate(std::span<const double> queries) const {
  const auto q = values_.cols();
  Matrix out(static_cast<Eigen::Index>(queries.size()), q);
  Eigen::RowVectorXd numer(q);
  for (std::size_t p = 0; p < queries.size(); ++p) {
    const double x = queries[p];
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteQuery, "query point is not finite");
    const auto row = static_cast<Eigen::Index>(p);

    bool snapped = false;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (std::abs(x - nodes_[j]) <= kNodeSnap) {
        out.row(row) = values_.row(static_cast<Eigen::Index>(j));
        snapped = true;
        break;
      }
    }
    if (snapped) continue;

    numer.setZero();
    double denom = 0.0;
    double sign = 1.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const double w = sign / (x - nodes_[j]);
      numer += w * values_.row(static_cast<Eigen::Index>(j));
      denom += w;
      sign = -sign;
    }
    out.row(row) = numer / denom;
  }
  return out;
}

}  // namespace nercc
