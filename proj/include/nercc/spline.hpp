#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nercc/types.hpp"

namespace nercc {

/// Strictly increasing knot abscissae inside the working interval [-1, 1].
/// At least three knots are required for a natural cubic smoothing spline.
class KnotVector {
 public:
  static constexpr double kLower = -1.0;
  static constexpr double kUpper = 1.0;
  static constexpr std::size_t kMinKnots = 3;

  explicit KnotVector(std::vector<double> t);

  std::size_t size() const noexcept { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  std::span<const double> values() const noexcept { return t_; }

 private:
  std::vector<double> t_;
};

/// Non-negative, finite weight of the roughness penalty.
class SmoothingParam {
 public:
  constexpr SmoothingParam() = default;
  explicit SmoothingParam(double lambda);

  double value() const noexcept { return lambda_; }

 private:
  double lambda_ = 0.0;
};

/// A vector-valued natural cubic spline stored by its values and second
/// derivatives at the knots. Immutable once built.
class SplineFit {
 public:
  SplineFit(KnotVector knots, Matrix fitted, Matrix second_derivs, SmoothingParam lambda);

  const KnotVector& knots() const noexcept { return knots_; }
  const Matrix& fitted() const noexcept { return fitted_; }
  const Matrix& second_derivs() const noexcept { return second_derivs_; }
  SmoothingParam lambda() const noexcept { return lambda_; }
  Eigen::Index output_dim() const noexcept { return fitted_.cols(); }

  /// Values at `points` (one row per point). Outside the knot span the spline
  /// continues linearly with its end slope.
  Matrix evaluate(std::span<const double> points) const;

  /// Second derivatives at `points`; zero outside the knot span.
  Matrix evaluate_second_derivative(std::span<const double> points) const;

  /// Closed-form integral of ||u''||^2 over the knot span, summed over outputs.
  double roughness() const;

 private:
  KnotVector knots_;
  Matrix fitted_;
  Matrix second_derivs_;
  SmoothingParam lambda_;
};

/// Minimizer of sum ||y_i - u(t_i)||^2 + lambda * integral ||u''||^2, one
/// output column at a time, using the banded Reinsch formulation.
SplineFit fit_smoothing_spline(const KnotVector& knots, const Matrix& values, SmoothingParam lambda);

/// Same minimizer computed from the explicit normal equations
/// theta = (M^T M + lambda * Omega)^{-1} M^T y over a cardinal natural-spline
/// basis. O(n^3); intended as an independent reference for tests.
SplineFit fit_smoothing_spline_dense(const KnotVector& knots, const Matrix& values,
                                     SmoothingParam lambda);

/// Sum of squared residuals of the fit against the values it was trained on.
double training_sse(const SplineFit& fit, const Matrix& values);

}  // namespace nercc
