#pragma once

#include <optional>
#include <span>

#include "nercc/types.hpp"

namespace nercc {

/// (1/K) sum_k ||y_k - yhat_k||^2.
double mse(const Matrix& y, const Matrix& yhat);

struct RelAcc {
  double agreement = 0.0;       // share of rows whose argmax matches the base model
  std::optional<double> ratio;  // acc(estimate) / acc(base), only with labels
};

/// Argmax agreement of `estimate` with `base` (ties go to the lowest index).
/// With labels, also the labeled accuracy ratio estimate/base; throws
/// ZeroBaseAccuracy if the base model gets every label wrong.
RelAcc rel_acc(const Matrix& base, const Matrix& estimate,
               std::optional<std::span<const int>> labels = std::nullopt);

/// Triangle-inequality split of the end-to-end Euclidean loss.
struct Decomposition {
  double l2_loss = 0.0;  // sum_k ||u_dec(a_k) - f(x_k)||
  double term1 = 0.0;    // sum_k ||u_dec(a_k) - f(u_enc(a_k))||
  double term2 = 0.0;    // sum_k ||f(u_enc(a_k)) - f(x_k)||
};

Decomposition decomposition(const Matrix& decoded_at_alpha, const Matrix& f_of_encoder_at_alpha,
                            const Matrix& f_at_x);

/// ||grad f||_inf^2 * sum_k ||u_enc(a_k) - x_k||^2.
double taylor_proxy_bound(double enc_train_sse, double grad_infnorm);

/// Mean squared second difference of consecutive coded rows:
/// (1/(N-2)) sum_n ||x_{n+1} - 2 x_n + x_{n-1}||^2.
double batch_roughness(const Matrix& coded);

}  // namespace nercc
