#include "nercc/models.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "nercc/error.hpp"
#include "nercc/random.hpp"
#include "nercc/tensor_io.hpp"

namespace nercc {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, msg);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " is not finite");
}

// Every model is evaluated one input at a time, so row r of the output never
// depends on how many other rows share the batch.
Vector affine(const DenseLayer& layer, const Vector& x) {
  return layer.weight * x + layer.bias;
}

void softmax(Vector& z) {
  const double top = z.maxCoeff();
  z = (z.array() - top).exp();
  z /= z.sum();
}

void activate(Vector& z, Activation a) {
  switch (a) {
    case Activation::Tanh: z = z.array().tanh(); break;
    case Activation::Relu: z = z.array().max(0.0); break;
  }
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

Vector random_vector(Rng& rng, Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

Eigen::Index json_dim(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<long long>() <= 0) {
    throw Error(ErrorCode::ParseError, std::string("manifest field '") + key +
                                           "' must be a positive integer");
  }
  return static_cast<Eigen::Index>(doc[key].get<long long>());
}

Matrix load_tensor_field(const json& layer, const char* key, const std::filesystem::path& base) {
  if (!layer.contains(key) || !layer[key].is_string()) {
    throw Error(ErrorCode::ParseError, std::string("layer is missing tensor path '") + key + "'");
  }
  const auto path = base / layer[key].get<std::string>();
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingTensorFile, "tensor file not found: " + path.string());
  }
  return tensor_to_matrix(read_ntf(path));
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Identity: return "identity";
    case ModelKind::Linear: return "linear";
    case ModelKind::AffineSoftmax: return "affine-softmax";
    case ModelKind::RbfMixture: return "rbf-mixture";
    case ModelKind::Mlp: return "mlp";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "identity") return ModelKind::Identity;
  if (name == "linear") return ModelKind::Linear;
  if (name == "affine-softmax") return ModelKind::AffineSoftmax;
  if (name == "rbf-mixture") return ModelKind::RbfMixture;
  if (name == "mlp") return ModelKind::Mlp;
  throw Error(ErrorCode::ParseError, "unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw Error(ErrorCode::ParseError, "unknown activation '" + std::string(name) + "'");
}

ComputeModel ComputeModel::identity(Eigen::Index dim) {
  require(dim > 0, "identity model needs a positive dimension");
  return ComputeModel(ModelKind::Identity, dim, dim);
}

ComputeModel ComputeModel::linear(Matrix weight) {
  require(weight.size() > 0, "linear model needs a non-empty weight");
  require_finite(weight, "weight");
  ComputeModel model(ModelKind::Linear, weight.cols(), weight.rows());
  const auto m = weight.rows();
  model.layers_.push_back(DenseLayer{std::move(weight), Vector::Zero(m), Activation::Tanh});
  return model;
}

ComputeModel ComputeModel::affine_softmax(Matrix weight, Vector bias) {
  require(weight.size() > 0, "affine-softmax model needs a non-empty weight");
  require(bias.size() == weight.rows(), "bias length must equal weight rows");
  require_finite(weight, "weight");
  require_finite(bias, "bias");
  ComputeModel model(ModelKind::AffineSoftmax, weight.cols(), weight.rows());
  model.layers_.push_back(DenseLayer{std::move(weight), std::move(bias), Activation::Tanh});
  return model;
}

ComputeModel ComputeModel::rbf_mixture(Matrix centers, Matrix amplitudes, double sigma) {
  require(centers.rows() > 0 && centers.cols() > 0, "rbf-mixture needs at least one center");
  require(amplitudes.rows() == centers.rows(), "amplitudes need one row per center");
  require(amplitudes.cols() > 0, "amplitudes need at least one output column");
  require_finite(centers, "centers");
  require_finite(amplitudes, "amplitudes");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::ShapeMismatch, "rbf sigma must be positive and finite");
  }
  ComputeModel model(ModelKind::RbfMixture, centers.cols(), amplitudes.cols());
  model.centers_ = std::move(centers);
  model.amplitudes_ = std::move(amplitudes);
  model.sigma_ = sigma;
  return model;
}

ComputeModel ComputeModel::mlp(std::vector<DenseLayer> layers) {
  require(!layers.empty(), "mlp needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require(l.weight.size() > 0, "mlp layer weight is empty");
    require(l.bias.size() == l.weight.rows(), "mlp layer bias length must equal weight rows");
    if (i > 0) {
      require(l.weight.cols() == layers[i - 1].weight.rows(),
              "mlp layer " + std::to_string(i) + " input width does not match previous output");
    }
    require_finite(l.weight, "mlp weight");
    require_finite(l.bias, "mlp bias");
  }
  ComputeModel model(ModelKind::Mlp, layers.front().weight.cols(), layers.back().weight.rows());
  model.layers_ = std::move(layers);
  return model;
}

Matrix ComputeModel::apply(const Matrix& x) const {
  if (x.cols() != d_) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(d_) +
                                              " input columns, got " + std::to_string(x.cols()));
  }
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "model input is not finite");

  if (kind_ == ModelKind::Identity) return x;

  Matrix out(x.rows(), m_);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector in = x.row(r).transpose();
    switch (kind_) {
      case ModelKind::Identity:
        break;
      case ModelKind::Linear:
        out.row(r) = (layers_[0].weight * in).transpose();
        break;
      case ModelKind::AffineSoftmax: {
        Vector z = affine(layers_[0], in);
        softmax(z);
        out.row(r) = z.transpose();
        break;
      }
      case ModelKind::RbfMixture: {
        const double inv_s2 = 1.0 / (sigma_ * sigma_);
        Vector acc = Vector::Zero(m_);
        for (Eigen::Index c = 0; c < centers_.rows(); ++c) {
          const double k = std::exp(-(in.transpose() - centers_.row(c)).squaredNorm() * inv_s2);
          acc += k * amplitudes_.row(c).transpose();
        }
        out.row(r) = acc.transpose();
        break;
      }
      case ModelKind::Mlp: {
        Vector z = in;
        for (const auto& layer : layers_) {
          z = affine(layer, z);
          activate(z, layer.activation);
        }
        out.row(r) = z.transpose();
        break;
      }
    }
  }
  return out;
}

ComputeModel load_model(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw Error(ErrorCode::ParseError, "manifest needs a string field 'kind'");
  }
  const ModelKind kind = parse_model_kind(doc["kind"].get<std::string>());
  const Eigen::Index d = json_dim(doc, "d");
  const Eigen::Index m = json_dim(doc, "m");
  const auto base = manifest.parent_path();
  const json layers = doc.value("layers", json::array());
  if (!layers.is_array()) throw Error(ErrorCode::ParseError, "'layers' must be an array");

  auto first_layer = [&]() -> const json& {
    if (layers.empty()) throw Error(ErrorCode::ParseError, "manifest has no layers");
    return layers[0];
  };

  ComputeModel model = [&] {
    switch (kind) {
      case ModelKind::Identity:
        if (d != m) throw Error(ErrorCode::ShapeMismatch, "identity model needs d == m");
        return ComputeModel::identity(d);
      case ModelKind::Linear:
        return ComputeModel::linear(load_tensor_field(first_layer(), "weight", base));
      case ModelKind::AffineSoftmax: {
        const auto& l = first_layer();
        return ComputeModel::affine_softmax(load_tensor_field(l, "weight", base),
                                            load_tensor_field(l, "bias", base).col(0));
      }
      case ModelKind::RbfMixture: {
        const auto& l = first_layer();
        return ComputeModel::rbf_mixture(load_tensor_field(l, "centers", base),
                                         load_tensor_field(l, "amplitudes", base),
                                         l.value("sigma", 1.0));
      }
      case ModelKind::Mlp: {
        std::vector<DenseLayer> dense;
        for (const auto& l : layers) {
          dense.push_back(DenseLayer{load_tensor_field(l, "weight", base),
                                     load_tensor_field(l, "bias", base).col(0),
                                     parse_activation(l.value("activation", "tanh"))});
        }
        return ComputeModel::mlp(std::move(dense));
      }
    }
    throw Error(ErrorCode::ParseError, "unhandled model kind");
  }();

  if (model.input_dim() != d || model.output_dim() != m) {
    throw Error(ErrorCode::ShapeMismatch,
                "tensors imply a " + std::to_string(model.input_dim()) + " -> " +
                    std::to_string(model.output_dim()) + " model but the manifest declares " +
                    std::to_string(d) + " -> " + std::to_string(m));
  }
  return model;
}

void save_model(const ComputeModel& model, const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  json doc;
  doc["kind"] = std::string(to_string(model.kind()));
  doc["d"] = model.input_dim();
  doc["m"] = model.output_dim();
  doc["layers"] = json::array();

  auto put = [&](const Tensor& t, const std::string& name) {
    const std::string file = stem + "_" + name + ".ntf";
    write_ntf(base / file, t);
    return file;
  };

  switch (model.kind()) {
    case ModelKind::Identity:
      break;
    case ModelKind::Linear:
      doc["layers"].push_back({{"weight", put(matrix_to_tensor(model.layers()[0].weight), "w0")}});
      break;
    case ModelKind::AffineSoftmax:
      doc["layers"].push_back({{"weight", put(matrix_to_tensor(model.layers()[0].weight), "w0")},
                               {"bias", put(vector_to_tensor(model.layers()[0].bias), "b0")}});
      break;
    case ModelKind::RbfMixture:
      doc["layers"].push_back({{"centers", put(matrix_to_tensor(model.centers()), "centers")},
                               {"amplitudes", put(matrix_to_tensor(model.amplitudes()), "amplitudes")},
                               {"sigma", model.sigma()}});
      break;
    case ModelKind::Mlp:
      for (std::size_t i = 0; i < model.layers().size(); ++i) {
        const auto& l = model.layers()[i];
        const auto idx = std::to_string(i);
        doc["layers"].push_back({{"weight", put(matrix_to_tensor(l.weight), "w" + idx)},
                                 {"bias", put(vector_to_tensor(l.bias), "b" + idx)},
                                 {"activation", std::string(to_string(l.activation))}});
      }
      break;
  }

  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
}

double estimate_grad_infnorm(const ComputeModel& model, const Matrix& points, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::ConfigInvalid, "finite-difference step must be positive");
  }
  if (points.cols() != model.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "points do not match the model input dimension");
  }
  double best = 0.0;
  const Eigen::Index d = points.cols();
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    // Rows 0..d-1 step forward along each axis, rows d..2d-1 step backward.
    Matrix probes(2 * d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      probes.row(j) = points.row(k);
      probes.row(d + j) = points.row(k);
      probes(j, j) += h;
      probes(d + j, j) -= h;
    }
    const Matrix out = model.apply(probes);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double g = ((out.row(j) - out.row(d + j)) / (2.0 * h)).cwiseAbs().maxCoeff();
      if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteResult, "gradient estimate is not finite");
      best = std::max(best, g);
    }
  }
  return best;
}

ComputeModel make_random_model(const RandomModelSpec& spec) {
  if (spec.d <= 0 || spec.m <= 0) throw Error(ErrorCode::ConfigInvalid, "model dims must be positive");
  Rng rng(spec.seed);
  const double in_scale = spec.scale / std::sqrt(static_cast<double>(spec.d));
  switch (spec.kind) {
    case ModelKind::Identity:
      if (spec.d != spec.m) throw Error(ErrorCode::ConfigInvalid, "identity model needs d == m");
      return ComputeModel::identity(spec.d);
    case ModelKind::Linear:
      return ComputeModel::linear(random_matrix(rng, spec.m, spec.d, in_scale));
    case ModelKind::AffineSoftmax: {
      Matrix w = random_matrix(rng, spec.m, spec.d, in_scale);
      Vector b = random_vector(rng, spec.m, 0.5 * spec.scale);
      return ComputeModel::affine_softmax(std::move(w), std::move(b));
    }
    case ModelKind::RbfMixture: {
      if (spec.centers <= 0) throw Error(ErrorCode::ConfigInvalid, "rbf-mixture needs centers > 0");
      Matrix centers = random_matrix(rng, spec.centers, spec.d, 1.0);
      Matrix amps = random_matrix(rng, spec.centers, spec.m, spec.scale);
      return ComputeModel::rbf_mixture(std::move(centers), std::move(amps), spec.sigma);
    }
    case ModelKind::Mlp: {
      std::vector<DenseLayer> layers;
      Eigen::Index in = spec.d;
      std::vector<Eigen::Index> widths = spec.hidden;
      widths.push_back(spec.m);
      for (Eigen::Index out : widths) {
        if (out <= 0) throw Error(ErrorCode::ConfigInvalid, "mlp widths must be positive");
        const double s = spec.scale / std::sqrt(static_cast<double>(in));
        layers.push_back(DenseLayer{random_matrix(rng, out, in, s), random_vector(rng, out, 0.1),
                                    spec.activation});
        in = out;
      }
      return ComputeModel::mlp(std::move(layers));
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unhandled model kind");
}

}  // namespace nercc
