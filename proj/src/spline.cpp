#include "nercc/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "nercc/error.hpp"

namespace nercc {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_fit_inputs(const KnotVector& knots, const Matrix& values) {
  if (static_cast<std::size_t>(values.rows()) != knots.size()) {
    throw Error(ErrorCode::ShapeMismatch, "value rows (" + std::to_string(values.rows()) +
                                              ") do not match knot count (" +
                                              std::to_string(knots.size()) + ")");
  }
  if (!all_finite(values)) throw Error(ErrorCode::NonFiniteInput, "spline values must be finite");
}

// LDL^T factorization of a symmetric positive definite pentadiagonal matrix.
// diag[i] = A(i,i), off1[i] = A(i,i+1), off2[i] = A(i,i+2).
class PentadiagonalLdlt {
 public:
  PentadiagonalLdlt(std::vector<double> diag, const std::vector<double>& off1,
                    const std::vector<double>& off2)
      : d_(std::move(diag)), l1_(d_.size(), 0.0), l2_(d_.size(), 0.0) {
    const std::size_t m = d_.size();
    for (std::size_t i = 0; i < m; ++i) {
      if (i >= 2) l2_[i] = off2[i - 2] / d_[i - 2];
      if (i >= 1) {
        double num = off1[i - 1];
        if (i >= 2) num -= l2_[i] * d_[i - 2] * l1_[i - 1];
        l1_[i] = num / d_[i - 1];
      }
      double piv = d_[i];
      if (i >= 1) piv -= l1_[i] * l1_[i] * d_[i - 1];
      if (i >= 2) piv -= l2_[i] * l2_[i] * d_[i - 2];
      if (!(piv > 0.0) || !std::isfinite(piv)) {
        throw Error(ErrorCode::SingularSystem, "banded spline system is not positive definite");
      }
      d_[i] = piv;
    }
  }

  // Solves in place.
  void solve(std::vector<double>& x) const {
    const std::size_t m = d_.size();
    for (std::size_t i = 0; i < m; ++i) {
      if (i >= 1) x[i] -= l1_[i] * x[i - 1];
      if (i >= 2) x[i] -= l2_[i] * x[i - 2];
    }
    for (std::size_t i = 0; i < m; ++i) x[i] /= d_[i];
    for (std::size_t k = m; k-- > 0;) {
      if (k + 1 < m) x[k] -= l1_[k + 1] * x[k + 1];
      if (k + 2 < m) x[k] -= l2_[k + 2] * x[k + 2];
    }
  }

 private:
  std::vector<double> d_;
  std::vector<double> l1_;
  std::vector<double> l2_;
};

}  // namespace

KnotVector::KnotVector(std::vector<double> t) : t_(std::move(t)) {
  if (t_.size() < kMinKnots) {
    throw Error(ErrorCode::TooFewKnots,
                "need at least 3 knots, got " + std::to_string(t_.size()));
  }
  for (double v : t_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "knot is not finite");
    if (v < kLower || v > kUpper) {
      throw Error(ErrorCode::NonIncreasingKnots, "knot outside [-1, 1]");
    }
  }
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    if (!(t_[i] < t_[i + 1])) {
      throw Error(ErrorCode::NonIncreasingKnots,
                  "knots must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }
}

SmoothingParam::SmoothingParam(double lambda) : lambda_(lambda) {
  if (!std::isfinite(lambda)) throw Error(ErrorCode::NonFiniteInput, "lambda must be finite");
  if (lambda < 0.0) throw Error(ErrorCode::NegativeLambda, "lambda must be >= 0");
}

SplineFit::SplineFit(KnotVector knots, Matrix fitted, Matrix second_derivs, SmoothingParam lambda)
    : knots_(std::move(knots)),
      fitted_(std::move(fitted)),
      second_derivs_(std::move(second_derivs)),
      lambda_(lambda) {
  const auto n = static_cast<Eigen::Index>(knots_.size());
  if (fitted_.rows() != n || second_derivs_.rows() != n ||
      fitted_.cols() != second_derivs_.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "spline fit arrays disagree with knot count");
  }
  if ((second_derivs_.row(0).array() != 0.0).any() ||
      (second_derivs_.row(n - 1).array() != 0.0).any()) {
    throw Error(ErrorCode::InvariantViolation,
                "natural spline requires zero second derivative at the end knots");
  }
}

Matrix SplineFit::evaluate(std::span<const double> points) const {
  const std::size_t n = knots_.size();
  const auto q = fitted_.cols();
  const auto t = knots_.values();
  Matrix out(static_cast<Eigen::Index>(points.size()), q);

  for (std::size_t p = 0; p < points.size(); ++p) {
    const double x = points[p];
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteQuery, "query point is not finite");
    const auto row = static_cast<Eigen::Index>(p);

    if (x < t[0]) {
      const double h = t[1] - t[0];
      for (Eigen::Index c = 0; c < q; ++c) {
        const double slope =
            (fitted_(1, c) - fitted_(0, c)) / h - h / 6.0 * second_derivs_(1, c);
        out(row, c) = fitted_(0, c) + slope * (x - t[0]);
      }
      continue;
    }
    if (x > t[n - 1]) {
      const auto a = static_cast<Eigen::Index>(n - 2);
      const auto b = static_cast<Eigen::Index>(n - 1);
      const double h = t[n - 1] - t[n - 2];
      for (Eigen::Index c = 0; c < q; ++c) {
        const double slope =
            (fitted_(b, c) - fitted_(a, c)) / h + h / 6.0 * second_derivs_(a, c);
        out(row, c) = fitted_(b, c) + slope * (x - t[n - 1]);
      }
      continue;
    }

    // Index of the segment [t[i], t[i+1]] containing x.
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    if (i > 0 && t[i - 1] == x) {
      out.row(row) = fitted_.row(static_cast<Eigen::Index>(i - 1));
      continue;
    }
    i = std::min(i, n - 1) - 1;
    const double h = t[i + 1] - t[i];
    const double left = x - t[i];
    const double right = t[i + 1] - x;
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = a + 1;
    for (Eigen::Index c = 0; c < q; ++c) {
      const double linear = (left * fitted_(b, c) + right * fitted_(a, c)) / h;
      const double bend = left * right / 6.0 *
                          ((1.0 + left / h) * second_derivs_(b, c) +
                           (1.0 + right / h) * second_derivs_(a, c));
      out(row, c) = linear - bend;
    }
  }
  return out;
}

Matrix SplineFit::evaluate_second_derivative(std::span<const double> points) const {
  const std::size_t n = knots_.size();
  const auto t = knots_.values();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(points.size()), fitted_.cols());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double x = points[p];
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteQuery, "query point is not finite");
    if (x < t[0] || x > t[n - 1]) continue;
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = std::min(static_cast<std::size_t>(it - t.begin()), n - 1) - 1;
    const double w = (x - t[i]) / (t[i + 1] - t[i]);
    const auto a = static_cast<Eigen::Index>(i);
    out.row(static_cast<Eigen::Index>(p)) =
        (1.0 - w) * second_derivs_.row(a) + w * second_derivs_.row(a + 1);
  }
  return out;
}

double SplineFit::roughness() const {
  // u'' is linear on each segment, so the integral of its square is exact.
  const auto t = knots_.values();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    const auto a = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < second_derivs_.cols(); ++c) {
      const double ga = second_derivs_(a, c);
      const double gb = second_derivs_(a + 1, c);
      total += h / 3.0 * (ga * ga + ga * gb + gb * gb);
    }
  }
  return total;
}

SplineFit fit_smoothing_spline(const KnotVector& knots, const Matrix& values,
                               SmoothingParam lambda) {
  check_fit_inputs(knots, values);
  const std::size_t n = knots.size();
  const std::size_t m = n - 2;
  const double lam = lambda.value();
  const auto t = knots.values();

  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];

  // Column j of Q (n x (n-2)) has entries q0, q1, q2 at rows j, j+1, j+2.
  std::vector<double> q0(m), q1(m), q2(m);
  for (std::size_t j = 0; j < m; ++j) {
    q0[j] = 1.0 / h[j];
    q1[j] = -1.0 / h[j] - 1.0 / h[j + 1];
    q2[j] = 1.0 / h[j + 1];
  }

  // R + lambda * Q^T Q, pentadiagonal.
  std::vector<double> diag(m), off1(m > 0 ? m - 1 : 0), off2(m > 1 ? m - 2 : 0);
  for (std::size_t j = 0; j < m; ++j) {
    diag[j] = (h[j] + h[j + 1]) / 3.0 + lam * (q0[j] * q0[j] + q1[j] * q1[j] + q2[j] * q2[j]);
    if (j + 1 < m) off1[j] = h[j + 1] / 6.0 + lam * (q1[j] * q0[j + 1] + q2[j] * q1[j + 1]);
    if (j + 2 < m) off2[j] = lam * q2[j] * q0[j + 2];
  }
  const PentadiagonalLdlt solver(std::move(diag), off1, off2);

  const auto q = values.cols();
  Matrix fitted(values.rows(), q);
  Matrix gamma = Matrix::Zero(values.rows(), q);
  std::vector<double> rhs(m);
  for (Eigen::Index c = 0; c < q; ++c) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      rhs[j] = (values(r + 2, c) - values(r + 1, c)) / h[j + 1] -
               (values(r + 1, c) - values(r, c)) / h[j];
    }
    solver.solve(rhs);
    for (std::size_t j = 0; j < m; ++j) gamma(static_cast<Eigen::Index>(j + 1), c) = rhs[j];

    // fitted = y - lambda * Q gamma
    for (std::size_t i = 0; i < n; ++i) {
      double qg = 0.0;
      if (i < m) qg += q0[i] * rhs[i];
      if (i >= 1 && i - 1 < m) qg += q1[i - 1] * rhs[i - 1];
      if (i >= 2) qg += q2[i - 2] * rhs[i - 2];
      const auto r = static_cast<Eigen::Index>(i);
      fitted(r, c) = lam == 0.0 ? values(r, c) : values(r, c) - lam * qg;
    }
  }
  return SplineFit(knots, std::move(fitted), std::move(gamma), lambda);
}

SplineFit fit_smoothing_spline_dense(const KnotVector& knots, const Matrix& values,
                                     SmoothingParam lambda) {
  check_fit_inputs(knots, values);
  const auto n = static_cast<Eigen::Index>(knots.size());
  const auto segs = n - 1;
  const auto t = knots.values();

  // The normal matrix I + lambda * Omega is ill-conditioned for large lambda,
  // so this reference path runs in extended precision.
  using Wide = long double;
  using WideMatrix = Eigen::Matrix<Wide, Eigen::Dynamic, Eigen::Dynamic>;

  // Cardinal natural cubic spline basis eta_j (eta_j(t_i) = delta_ij), each
  // stored per segment as a + b s + c s^2 + d s^3 with s = t - t_i. The
  // coefficients come from one generic 4(n-1) square system: interpolation,
  // C1 and C2 continuity, and zero curvature at both ends.
  const Eigen::Index unknowns = 4 * segs;
  WideMatrix sys = WideMatrix::Zero(unknowns, unknowns);
  WideMatrix rhs = WideMatrix::Zero(unknowns, n);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < segs; ++i) {
    const Wide h = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
    const Eigen::Index k = 4 * i;
    sys(row, k) = 1.0;
    rhs(row, i) = 1.0;
    ++row;
    sys(row, k) = 1.0;
    sys(row, k + 1) = h;
    sys(row, k + 2) = h * h;
    sys(row, k + 3) = h * h * h;
    rhs(row, i + 1) = 1.0;
    ++row;
    if (i + 1 < segs) {
      sys(row, k + 1) = 1.0;
      sys(row, k + 2) = 2.0 * h;
      sys(row, k + 3) = 3.0 * h * h;
      sys(row, k + 5) = -1.0;
      ++row;
      sys(row, k + 2) = 2.0;
      sys(row, k + 3) = 6.0 * h;
      sys(row, k + 6) = -2.0;
      ++row;
    }
  }
  sys(row, 2) = 2.0;
  ++row;
  {
    const Wide h = t[static_cast<std::size_t>(n - 1)] - t[static_cast<std::size_t>(n - 2)];
    const Eigen::Index k = 4 * (segs - 1);
    sys(row, k + 2) = 2.0;
    sys(row, k + 3) = 6.0 * h;
    ++row;
  }
  const Eigen::FullPivLU<WideMatrix> basis_lu(sys);
  if (!basis_lu.isInvertible()) {
    throw Error(ErrorCode::SingularSystem, "natural spline basis system is singular");
  }
  const WideMatrix coef = basis_lu.solve(rhs);  // column j holds eta_j

  // M_ij = eta_j(t_i), evaluated from the piecewise coefficients.
  WideMatrix design(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index s = std::min(i, segs - 1);
    const Wide x = Wide(t[static_cast<std::size_t>(i)]) - t[static_cast<std::size_t>(s)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index k = 4 * s;
      design(i, j) = coef(k, j) + x * (coef(k + 1, j) + x * (coef(k + 2, j) + x * coef(k + 3, j)));
    }
  }

  // Omega_ij = integral eta_i'' eta_j'', exact for piecewise-linear curvature.
  WideMatrix omega = WideMatrix::Zero(n, n);
  for (Eigen::Index s = 0; s < segs; ++s) {
    const Wide h = t[static_cast<std::size_t>(s + 1)] - t[static_cast<std::size_t>(s)];
    const Eigen::Index k = 4 * s;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Wide a0 = 2.0 * coef(k + 2, i);
      const Wide a1 = 6.0 * coef(k + 3, i);
      for (Eigen::Index j = 0; j < n; ++j) {
        const Wide b0 = 2.0 * coef(k + 2, j);
        const Wide b1 = 6.0 * coef(k + 3, j);
        omega(i, j) += a0 * b0 * h + (a0 * b1 + a1 * b0) * h * h / 2.0 + a1 * b1 * h * h * h / 3.0;
      }
    }
  }

  const WideMatrix normal = design.transpose() * design + Wide(lambda.value()) * omega;
  const Eigen::FullPivLU<WideMatrix> normal_lu(normal);
  if (normal_lu.rcond() < 1e-17L) {
    throw Error(ErrorCode::SingularSystem, "normal matrix is numerically singular");
  }
  const WideMatrix theta = normal_lu.solve(design.transpose() * values.cast<Wide>());

  Matrix fitted = (design * theta).cast<double>();
  Matrix gamma = Matrix::Zero(n, values.cols());
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const Eigen::Index k = 4 * i;  // segment starting at knot i
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      Wide g = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) g += theta(j, c) * 2.0 * coef(k + 2, j);
      gamma(i, c) = static_cast<double>(g);
    }
  }
  return SplineFit(knots, std::move(fitted), std::move(gamma), lambda);
}

double training_sse(const SplineFit& fit, const Matrix& values) {
  if (values.rows() != fit.fitted().rows() || values.cols() != fit.fitted().cols()) {
    throw Error(ErrorCode::ShapeMismatch, "training values do not match the fit");
  }
  return (fit.fitted() - values).squaredNorm();
}

}  // namespace nercc
