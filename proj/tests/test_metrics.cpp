#include <doctest.h>

#include <cmath>
#include <vector>

#include "nercc/codec.hpp"
#include "nercc/error.hpp"
#include "nercc/metrics.hpp"
#include "nercc/models.hpp"
#include "test_support.hpp"

using namespace nercc;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvariantViolation;
}

}  // namespace

TEST_CASE("mse") {
  Rng rng(1);
  const Matrix y = nercc::testing::random_matrix(rng, 4, 3);
  CHECK(mse(y, y) == 0.0);

  Matrix a(1, 2), b(1, 2);
  a << 1.0, 0.0;
  b << 0.0, 0.0;
  CHECK(mse(a, b) == 1.0);

  Matrix p = Matrix::Zero(2, 2);
  Matrix q(2, 2);
  q << 3.0, 4.0, 0.0, 0.0;
  CHECK(mse(p, q) == 12.5);

  const Matrix z = nercc::testing::random_matrix(rng, 4, 3);
  CHECK(mse(y, z) == mse(z, y));
  CHECK(mse(y, z) >= 0.0);
  CHECK(code_of([&] { mse(y, Matrix::Zero(3, 3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("rel_acc agreement and labelled ratio") {
  Matrix base(4, 3);
  base << 0.9, 0.05, 0.05,  //
      0.1, 0.8, 0.1,        //
      0.2, 0.2, 0.6,        //
      0.5, 0.4, 0.1;
  CHECK(rel_acc(base, base).agreement == 1.0);
  CHECK_FALSE(rel_acc(base, base).ratio.has_value());

  Matrix flipped(4, 3);
  flipped << 0.0, 1.0, 0.0,  //
      1.0, 0.0, 0.0,         //
      1.0, 0.0, 0.0,         //
      0.0, 0.0, 1.0;
  CHECK(rel_acc(base, flipped).agreement == 0.0);

  // Argmaxes of base: 0, 1, 2, 0. Labels make rows 0-2 right and row 3 wrong.
  const std::vector<int> labels = {0, 1, 2, 2};
  Matrix est = base;
  est.row(3) << 0.1, 0.8, 0.1;  // still wrong, different argmax
  const auto r = rel_acc(base, est, std::span<const int>(labels));
  CHECK(r.agreement == 0.75);
  REQUIRE(r.ratio.has_value());
  CHECK(*r.ratio == 1.0);

  const std::vector<int> hopeless = {1, 0, 0, 1};
  CHECK(code_of([&] { rel_acc(base, base, std::span<const int>(hopeless)); }) ==
        ErrorCode::ZeroBaseAccuracy);
}

TEST_CASE("ties go to the lowest index") {
  Matrix a(1, 3), b(1, 3);
  a << 0.5, 0.5, 0.0;
  b << 0.7, 0.1, 0.2;
  CHECK(rel_acc(a, b).agreement == 1.0);
}

TEST_CASE("agreement is invariant to monotone transforms") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = nercc::testing::random_matrix(rng, 10, 4);
    const Matrix b = nercc::testing::random_matrix(rng, 10, 4);
    const Matrix ta = (a.array() * 3.0).exp() + 1.0;
    const Matrix tb = (b.array() * 3.0).exp() + 1.0;
    CHECK(rel_acc(a, b).agreement == rel_acc(ta, tb).agreement);
  }
}

TEST_CASE("decomposition satisfies the triangle inequality") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix u = nercc::testing::random_matrix(rng, 4, 2);
    const Matrix fe = nercc::testing::random_matrix(rng, 4, 2);
    const Matrix fx = nercc::testing::random_matrix(rng, 4, 2);
    const auto d = decomposition(u, fe, fx);
    double l2 = 0.0, t1 = 0.0, t2 = 0.0;
    for (Eigen::Index k = 0; k < 4; ++k) {
      l2 += std::hypot(u(k, 0) - fx(k, 0), u(k, 1) - fx(k, 1));
      t1 += std::hypot(u(k, 0) - fe(k, 0), u(k, 1) - fe(k, 1));
      t2 += std::hypot(fe(k, 0) - fx(k, 0), fe(k, 1) - fx(k, 1));
    }
    CHECK(d.l2_loss == doctest::Approx(l2).epsilon(1e-14));
    CHECK(d.term1 == doctest::Approx(t1).epsilon(1e-14));
    CHECK(d.term2 == doctest::Approx(t2).epsilon(1e-14));
    CHECK(d.l2_loss <= d.term1 + d.term2 + 1e-9);
  }
  const Matrix same = Matrix::Ones(3, 2);
  const auto z = decomposition(same, same, same);
  CHECK(z.l2_loss == 0.0);
  CHECK(z.term1 == 0.0);
  CHECK(z.term2 == 0.0);
}

TEST_CASE("interpolating encoder leaves term 2 at zero") {
  const auto alphas = alpha_points(6);
  Rng rng(4);
  const Matrix x = nercc::testing::random_matrix(rng, 6, 3);
  const SchemeConfig cfg{Scheme::Nercc, SmoothingParam(0.0), SmoothingParam(0.0)};
  const Matrix at_alpha = encoder_at(x, alphas, alphas.values(), cfg);
  const auto model = ComputeModel::identity(3);
  const Matrix u = nercc::testing::random_matrix(rng, 6, 3);
  const auto d = decomposition(u, model.apply(at_alpha), model.apply(x));
  CHECK(d.term2 == 0.0);
  CHECK(d.l2_loss == d.term1);
}

TEST_CASE("taylor proxy") {
  CHECK(taylor_proxy_bound(0.0, 5.0) == 0.0);
  CHECK(taylor_proxy_bound(3.0, 2.0) == 12.0);

  // Scalar linear model: squared term 2 equals w^2 times the encoder SSE.
  const double w = -1.7;
  Matrix wm(1, 1);
  wm << w;
  const auto model = ComputeModel::linear(wm);
  const auto alphas = alpha_points(9);
  Rng rng(5);
  const Matrix x = nercc::testing::random_matrix(rng, 9, 1);
  const SchemeConfig cfg{Scheme::Nercc, SmoothingParam(0.3), SmoothingParam(0.0)};
  const Matrix u = encoder_at(x, alphas, alphas.values(), cfg);
  const double sse = (u - x).squaredNorm();
  const double term2_sq = (model.apply(u) - model.apply(x)).squaredNorm();
  CHECK(term2_sq == doctest::Approx(taylor_proxy_bound(sse, std::abs(w))).epsilon(1e-12));
}

TEST_CASE("batch roughness") {
  CHECK(batch_roughness(Matrix::Constant(6, 2, 3.0)) == 0.0);
  Matrix lin(5, 2);
  for (Eigen::Index n = 0; n < 5; ++n) lin.row(n) << 2.0 * n - 1.0, -0.5 * n;
  CHECK(batch_roughness(lin) == 0.0);
  Matrix spike(3, 1);
  spike << 0.0, 1.0, 0.0;
  CHECK(batch_roughness(spike) == 4.0);
  CHECK(code_of([] { batch_roughness(Matrix::Zero(2, 1)); }) == ErrorCode::TooFewPoints);
}
