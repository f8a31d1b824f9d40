#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "nercc/types.hpp"

namespace nercc {

enum class ModelKind { Identity, Linear, AffineSoftmax, RbfMixture, Mlp };
enum class Activation { Tanh, Relu };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// y = act(W x + b), W is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::Tanh;
};

/// A deterministic map R^d -> R^m applied row-wise. Immutable after
/// construction, so `apply` may be called from several threads at once.
class ComputeModel {
 public:
  static ComputeModel identity(Eigen::Index dim);
  /// f(x) = W x, W is m x d.
  static ComputeModel linear(Matrix weight);
  /// f(x) = softmax(W x + b).
  static ComputeModel affine_softmax(Matrix weight, Vector bias);
  /// f_i(x) = sum_c A(c, i) exp(-||x - mu_c||^2 / sigma^2); centers are C x d,
  /// amplitudes C x m.
  static ComputeModel rbf_mixture(Matrix centers, Matrix amplitudes, double sigma);
  static ComputeModel mlp(std::vector<DenseLayer> layers);

  ModelKind kind() const noexcept { return kind_; }
  Eigen::Index input_dim() const noexcept { return d_; }
  Eigen::Index output_dim() const noexcept { return m_; }

  Matrix apply(const Matrix& x) const;

  // Parameters, for serialization. Meaning depends on kind().
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const Matrix& centers() const noexcept { return centers_; }
  const Matrix& amplitudes() const noexcept { return amplitudes_; }
  double sigma() const noexcept { return sigma_; }

 private:
  ComputeModel(ModelKind kind, Eigen::Index d, Eigen::Index m) : kind_(kind), d_(d), m_(m) {}

  ModelKind kind_;
  Eigen::Index d_;
  Eigen::Index m_;
  std::vector<DenseLayer> layers_;  // linear / affine-softmax use layers_[0]
  Matrix centers_;
  Matrix amplitudes_;
  double sigma_ = 1.0;
};

/// Reads a JSON manifest; tensor paths are resolved relative to it.
ComputeModel load_model(const std::filesystem::path& manifest);

/// Writes `<manifest>` plus NTF1 tensors named `<stem>_*.ntf` beside it.
void save_model(const ComputeModel& model, const std::filesystem::path& manifest);

/// Largest |df_i/dx_j| over the rows of `points`, by central differences.
double estimate_grad_infnorm(const ComputeModel& model, const Matrix& points, double h);

/// Options for randomly initialised stand-in models.
struct RandomModelSpec {
  ModelKind kind = ModelKind::AffineSoftmax;
  Eigen::Index d = 8;
  Eigen::Index m = 4;
  double scale = 1.0;       // weight / amplitude scale
  Eigen::Index centers = 16;  // rbf-mixture
  double sigma = 2.0;       // rbf-mixture width
  std::vector<Eigen::Index> hidden = {32};  // mlp hidden widths
  Activation activation = Activation::Tanh;
  std::uint64_t seed = 1;
};

ComputeModel make_random_model(const RandomModelSpec& spec);

}  // namespace nercc
