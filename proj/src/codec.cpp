#include "nercc/codec.hpp"

#include <string>

#include "nercc/berrut.hpp"
#include "nercc/error.hpp"

namespace nercc {

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::Nercc: return "nercc";
    case Scheme::NerccAg: return "nercc-ag";
    case Scheme::Bacc: return "bacc";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "nercc") return Scheme::Nercc;
  if (name == "nercc-ag") return Scheme::NerccAg;
  if (name == "bacc") return Scheme::Bacc;
  throw Error(ErrorCode::ConfigInvalid, "unknown scheme '" + std::string(name) + "'");
}

SmoothingParam SchemeConfig::effective_lambda_enc() const noexcept {
  return scheme == Scheme::Nercc ? lambda_enc : SmoothingParam{};
}

SmoothingParam SchemeConfig::effective_lambda_dec() const noexcept {
  return scheme == Scheme::Nercc ? lambda_dec : SmoothingParam{};
}

std::size_t min_survivors(const SchemeConfig& cfg) noexcept {
  return cfg.scheme == Scheme::Bacc ? 1 : KnotVector::kMinKnots;
}

Matrix encoder_at(const Matrix& data, const NodeSet& alphas, std::span<const double> points,
                  const SchemeConfig& cfg) {
  if (static_cast<std::size_t>(data.rows()) != alphas.size()) {
    throw Error(ErrorCode::ShapeMismatch, "data has " + std::to_string(data.rows()) +
                                              " rows but there are " +
                                              std::to_string(alphas.size()) + " alpha nodes");
  }
  if (data.rows() < 3) throw Error(ErrorCode::TooFewPoints, "encoding needs K >= 3 data points");
  if (!data.allFinite()) throw Error(ErrorCode::NonFiniteData, "data contains non-finite entries");

  const std::vector<double> nodes(alphas.values().begin(), alphas.values().end());
  if (cfg.scheme == Scheme::Bacc) return BerrutInterpolant(nodes, data).evaluate(points);
  return fit_smoothing_spline(KnotVector(nodes), data, cfg.effective_lambda_enc()).evaluate(points);
}

CodedBatch encode(const Matrix& data, const NodeSet& alphas, const NodeSet& betas,
                  const SchemeConfig& cfg) {
  return CodedBatch{betas, encoder_at(data, alphas, betas.values(), cfg)};
}

Matrix decode(const SurvivorResults& results, const NodeSet& betas, const NodeSet& alphas,
              const SchemeConfig& cfg) {
  if (static_cast<Eigen::Index>(results.indices.size()) != results.outputs.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "survivor index count does not match output rows");
  }
  std::vector<double> nodes;
  nodes.reserve(results.indices.size());
  for (std::size_t r = 0; r < results.indices.size(); ++r) {
    const std::size_t idx = results.indices[r];
    if (idx >= betas.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "survivor index " + std::to_string(idx) +
                                                  " outside [0, " + std::to_string(betas.size()) +
                                                  ")");
    }
    if (r > 0 && !(results.indices[r - 1] < idx)) {
      throw Error(ErrorCode::IndexOutOfRange, "survivor indices must be strictly increasing");
    }
    nodes.push_back(betas[idx]);
  }
  if (nodes.size() < min_survivors(cfg)) {
    throw Error(ErrorCode::DecodingInfeasible,
                std::to_string(nodes.size()) + " survivors, scheme " +
                    std::string(to_string(cfg.scheme)) + " needs " +
                    std::to_string(min_survivors(cfg)));
  }
  if (!results.outputs.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "worker outputs contain non-finite entries");
  }

  if (cfg.scheme == Scheme::Bacc) {
    return BerrutInterpolant(std::move(nodes), results.outputs).evaluate(alphas.values());
  }
  return fit_smoothing_spline(KnotVector(std::move(nodes)), results.outputs,
                              cfg.effective_lambda_dec())
      .evaluate(alphas.values());
}

}  // namespace nercc
