#include "nercc/metrics.hpp"

#include <string>

#include "nercc/error.hpp"

namespace nercc {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

Eigen::Index argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return best;
}

}  // namespace

double mse(const Matrix& y, const Matrix& yhat) {
  same_shape(y, yhat, "mse");
  if (y.rows() == 0) throw Error(ErrorCode::EmptyInput, "mse of zero rows");
  return (y - yhat).squaredNorm() / static_cast<double>(y.rows());
}

RelAcc rel_acc(const Matrix& base, const Matrix& estimate,
               std::optional<std::span<const int>> labels) {
  same_shape(base, estimate, "rel_acc");
  if (base.rows() == 0) throw Error(ErrorCode::EmptyInput, "rel_acc of zero rows");
  if (base.cols() < 2) throw Error(ErrorCode::ShapeMismatch, "rel_acc needs at least 2 outputs");
  if (labels && static_cast<Eigen::Index>(labels->size()) != base.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match rows");
  }

  std::size_t agree = 0;
  std::size_t base_hits = 0;
  std::size_t est_hits = 0;
  for (Eigen::Index r = 0; r < base.rows(); ++r) {
    const auto b = argmax_row(base, r);
    const auto e = argmax_row(estimate, r);
    if (b == e) ++agree;
    if (labels) {
      const auto label = (*labels)[static_cast<std::size_t>(r)];
      if (b == label) ++base_hits;
      if (e == label) ++est_hits;
    }
  }
  RelAcc out;
  out.agreement = static_cast<double>(agree) / static_cast<double>(base.rows());
  if (labels) {
    if (base_hits == 0) throw Error(ErrorCode::ZeroBaseAccuracy, "base model accuracy is zero");
    out.ratio = static_cast<double>(est_hits) / static_cast<double>(base_hits);
  }
  return out;
}

Decomposition decomposition(const Matrix& decoded_at_alpha, const Matrix& f_of_encoder_at_alpha,
                            const Matrix& f_at_x) {
  same_shape(decoded_at_alpha, f_of_encoder_at_alpha, "decomposition");
  same_shape(decoded_at_alpha, f_at_x, "decomposition");
  Decomposition d;
  for (Eigen::Index k = 0; k < f_at_x.rows(); ++k) {
    d.l2_loss += (decoded_at_alpha.row(k) - f_at_x.row(k)).norm();
    d.term1 += (decoded_at_alpha.row(k) - f_of_encoder_at_alpha.row(k)).norm();
    d.term2 += (f_of_encoder_at_alpha.row(k) - f_at_x.row(k)).norm();
  }
  return d;
}

double taylor_proxy_bound(double enc_train_sse, double grad_infnorm) {
  if (enc_train_sse < 0.0 || grad_infnorm < 0.0) {
    throw Error(ErrorCode::ConfigInvalid, "taylor proxy inputs must be non-negative");
  }
  return grad_infnorm * grad_infnorm * enc_train_sse;
}

double batch_roughness(const Matrix& coded) {
  const auto n = coded.rows();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "batch roughness needs at least 3 rows");
  double total = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    total += (coded.row(i + 1) - 2.0 * coded.row(i) + coded.row(i - 1)).squaredNorm();
  }
  return total / static_cast<double>(n - 2);
}

}  // namespace nercc
