#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nercc/nodes.hpp"
#include "nercc/spline.hpp"
#include "nercc/types.hpp"

namespace nercc {

enum class Scheme { Nercc, NerccAg, Bacc };

std::string_view to_string(Scheme s) noexcept;
Scheme parse_scheme(std::string_view name);

/// Codec selection. NeRCC-Ag always runs with both smoothing parameters at
/// zero, and BACC has none; `effective_*` report what is actually used.
struct SchemeConfig {
  Scheme scheme = Scheme::Nercc;
  SmoothingParam lambda_enc;
  SmoothingParam lambda_dec;

  SmoothingParam effective_lambda_enc() const noexcept;
  SmoothingParam effective_lambda_dec() const noexcept;
};

/// Coded worker inputs: row n is u_enc(beta_n).
struct CodedBatch {
  NodeSet betas;
  Matrix coded;
};

/// Worker outputs that arrived in time. `indices` are 0-based worker ids in
/// strictly increasing order; row r of `outputs` belongs to worker indices[r].
struct SurvivorResults {
  std::vector<std::size_t> indices;
  Matrix outputs;
};

/// Smallest survivor count the scheme's decoder accepts.
std::size_t min_survivors(const SchemeConfig& cfg) noexcept;

/// Evaluates the encoding regression through (alpha_k, x_k) at `points`.
Matrix encoder_at(const Matrix& data, const NodeSet& alphas, std::span<const double> points,
                  const SchemeConfig& cfg);

CodedBatch encode(const Matrix& data, const NodeSet& alphas, const NodeSet& betas,
                  const SchemeConfig& cfg);

/// Fits the decoding regression on (beta_j, f(x~_j)) for surviving j and
/// returns its values at every alpha_k.
Matrix decode(const SurvivorResults& results, const NodeSet& betas, const NodeSet& alphas,
              const SchemeConfig& cfg);

}  // namespace nercc
