#include "nercc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nercc/error.hpp"
#include "nercc/metrics.hpp"
#include "nercc/nodes.hpp"
#include "nercc/random.hpp"
#include "nercc/svg_plot.hpp"
#include "nercc/tensor_io.hpp"

namespace nercc {

namespace {

using json = nlohmann::json;

// Seed sub-streams. Trials of run/sweep and the tuning validation trials
// never share a stream.
constexpr std::uint64_t kTrialStream = 0x545249414C530000ULL;
constexpr std::uint64_t kValidationStream = 0x56414C4944415445ULL;
constexpr std::uint64_t kDataStream = 0x4441544100000000ULL;
constexpr std::uint64_t kStragglerStream = 0x5354524147000000ULL;

constexpr double kTriangleSlack = 1e-9;
constexpr double kTieTolerance = 1e-12;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                         std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      config_error("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> parse_grid(const json& v, const char* name) {
  if (!v.is_array()) config_error(std::string(name) + " must be an array of numbers");
  return v.get<std::vector<double>>();
}

void parse_model(const json& m, ExperimentConfig& cfg, const std::filesystem::path& base) {
  if (!m.is_object()) config_error("'model' must be an object");
  if (m.contains("manifest")) {
    reject_unknown_keys(m, {"manifest"}, "model");
    cfg.model_manifest = resolve(base, m["manifest"].get<std::string>());
    return;
  }
  reject_unknown_keys(m, {"kind", "m", "scale", "centers", "sigma", "hidden", "activation", "seed"},
                      "model");
  auto& spec = cfg.model;
  if (m.contains("kind")) spec.kind = parse_model_kind(m["kind"].get<std::string>());
  if (m.contains("m")) spec.m = m["m"].get<Eigen::Index>();
  if (m.contains("scale")) spec.scale = m["scale"].get<double>();
  if (m.contains("centers")) spec.centers = m["centers"].get<Eigen::Index>();
  if (m.contains("sigma")) spec.sigma = m["sigma"].get<double>();
  if (m.contains("hidden")) spec.hidden = m["hidden"].get<std::vector<Eigen::Index>>();
  if (m.contains("activation")) spec.activation = parse_activation(m["activation"].get<std::string>());
  if (m.contains("seed")) spec.seed = m["seed"].get<std::uint64_t>();
}

void parse_dataset(const json& d, ExperimentConfig& cfg, const std::filesystem::path& base) {
  if (!d.is_object()) config_error("'dataset' must be an object");
  reject_unknown_keys(d, {"kind", "d", "seed", "terms", "path", "label_column"}, "dataset");
  auto& ds = cfg.dataset;
  if (d.contains("kind")) ds.kind = parse_dataset_kind(d["kind"].get<std::string>());
  if (d.contains("d")) ds.d = d["d"].get<Eigen::Index>();
  if (d.contains("seed")) ds.seed = d["seed"].get<std::uint64_t>();
  if (d.contains("terms")) ds.terms = d["terms"].get<int>();
  if (d.contains("path")) ds.path = resolve(base, d["path"].get<std::string>());
  if (d.contains("label_column")) ds.label_column = d["label_column"].get<std::string>();
}

void parse_stragglers(const json& s, ExperimentConfig& cfg) {
  if (!s.is_object()) config_error("'stragglers' must be an object");
  const std::string mode = s.value("mode", std::string("fixed-count"));
  cfg.stragglers.clear();
  if (mode == "fixed-count") {
    reject_unknown_keys(s, {"mode", "counts"}, "stragglers");
    for (auto c : s.at("counts").get<std::vector<std::size_t>>()) {
      cfg.stragglers.push_back(StragglerConfig::fixed_count(c));
    }
  } else if (mode == "delay-deadline") {
    reject_unknown_keys(s, {"mode", "t0", "mean", "deadlines"}, "stragglers");
    const double t0 = s.value("t0", 0.0);
    const double mean = s.value("mean", 1.0);
    for (auto tau : s.at("deadlines").get<std::vector<double>>()) {
      cfg.stragglers.push_back(StragglerConfig::delay_deadline(t0, mean, tau));
    }
  } else if (mode == "explicit-list") {
    reject_unknown_keys(s, {"mode", "lists"}, "stragglers");
    for (auto& list : s.at("lists").get<std::vector<std::vector<std::size_t>>>()) {
      cfg.stragglers.push_back(StragglerConfig::explicit_list(std::move(list)));
    }
  } else {
    config_error("unknown straggler mode '" + mode + "'");
  }
}

// ---------------------------------------------------------------------------
// Data sources

struct TrialData {
  Matrix x;
  std::vector<int> labels;
};

class DataSource {
 public:
  explicit DataSource(const DatasetSpec& spec) : spec_(spec) {
    if (spec.kind == DatasetKind::Csv) {
      load_csv();
    } else if (spec.kind == DatasetKind::Ntf) {
      pool_ = tensor_to_matrix(read_ntf(spec.path));
    }
    if (!pool_.allFinite()) throw Error(ErrorCode::NonFiniteData, "dataset contains non-finite values");
  }

  Eigen::Index dim() const { return from_file() ? pool_.cols() : spec_.d; }
  bool has_labels() const { return !labels_.empty(); }
  bool from_file() const { return spec_.kind == DatasetKind::Csv || spec_.kind == DatasetKind::Ntf; }
  Eigen::Index pool_rows() const { return pool_.rows(); }

  TrialData draw(std::uint64_t seed, const NodeSet& alphas) const {
    const auto K = static_cast<Eigen::Index>(alphas.size());
    Rng rng(seed);
    TrialData out;
    switch (spec_.kind) {
      case DatasetKind::Normal:
        out.x.resize(K, spec_.d);
        for (Eigen::Index k = 0; k < K; ++k) {
          for (Eigen::Index j = 0; j < spec_.d; ++j) out.x(k, j) = rng.normal();
        }
        break;
      case DatasetKind::SmoothCurve: {
        out.x = Matrix::Zero(K, spec_.d);
        const double amp = 1.0 / std::sqrt(static_cast<double>(spec_.terms));
        for (Eigen::Index j = 0; j < spec_.d; ++j) {
          for (int t = 0; t < spec_.terms; ++t) {
            const double a = amp * rng.normal();
            const double w = rng.uniform(0.5, 3.0);
            const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (Eigen::Index k = 0; k < K; ++k) {
              out.x(k, j) += a * std::sin(w * alphas[static_cast<std::size_t>(k)] + phi);
            }
          }
        }
        break;
      }
      case DatasetKind::Linear: {
        Vector v(spec_.d), c(spec_.d);
        for (Eigen::Index j = 0; j < spec_.d; ++j) v(j) = rng.normal();
        for (Eigen::Index j = 0; j < spec_.d; ++j) c(j) = rng.normal();
        out.x.resize(K, spec_.d);
        for (Eigen::Index k = 0; k < K; ++k) {
          out.x.row(k) = (alphas[static_cast<std::size_t>(k)] * v + c).transpose();
        }
        break;
      }
      case DatasetKind::Csv:
      case DatasetKind::Ntf: {
        // Partial Fisher-Yates over the row pool.
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(pool_.rows()));
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
        out.x.resize(K, pool_.cols());
        for (Eigen::Index k = 0; k < K; ++k) {
          const auto i = static_cast<std::size_t>(k);
          const auto j = i + static_cast<std::size_t>(rng.below(perm.size() - i));
          std::swap(perm[i], perm[j]);
          out.x.row(k) = pool_.row(perm[i]);
          if (has_labels()) out.labels.push_back(labels_[static_cast<std::size_t>(perm[i])]);
        }
        break;
      }
    }
    return out;
  }

 private:
  void load_csv() {
    const CsvTable table = read_csv(spec_.path);
    std::optional<std::size_t> label_col;
    if (!spec_.label_column.empty()) label_col = table.column(spec_.label_column);
    const std::size_t cols = table.header.size() - (label_col ? 1 : 0);
    if (cols == 0) throw Error(ErrorCode::EmptyInput, spec_.path.string() + " has no feature columns");
    pool_.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      if (row.size() != table.header.size()) {
        throw Error(ErrorCode::ParseError, spec_.path.string() + ": row " + std::to_string(r + 1) +
                                               " has " + std::to_string(row.size()) + " fields");
      }
      Eigen::Index j = 0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        std::size_t used = 0;
        try {
          if (label_col && c == *label_col) {
            labels_.push_back(std::stoi(row[c], &used));
          } else {
            pool_(static_cast<Eigen::Index>(r), j++) = std::stod(row[c], &used);
          }
        } catch (const std::logic_error&) {
          used = 0;
        }
        if (used == 0 || used != row[c].size()) {
          throw Error(ErrorCode::ParseError, spec_.path.string() + ": bad number '" + row[c] +
                                                 "' in row " + std::to_string(r + 1));
        }
      }
    }
  }

  DatasetSpec spec_;
  Matrix pool_;
  std::vector<int> labels_;
};

ComputeModel build_model(const ExperimentConfig& cfg, Eigen::Index d) {
  if (!cfg.model_manifest.empty()) {
    ComputeModel model = [&] {
      try {
        return load_model(cfg.model_manifest);
      } catch (const Error& e) {
        throw Error(ErrorCode::ModelLoadError, e.what());
      }
    }();
    if (model.input_dim() != d) {
      throw Error(ErrorCode::ConfigInvalid, "model input dimension " +
                                                std::to_string(model.input_dim()) +
                                                " does not match data dimension " + std::to_string(d));
    }
    return model;
  }
  RandomModelSpec spec = cfg.model;
  spec.d = d;
  if (spec.kind == ModelKind::Identity) spec.m = d;
  return make_random_model(spec);
}

// ---------------------------------------------------------------------------
// Trial engine

std::string setting_label(const StragglerConfig& s) {
  switch (s.mode) {
    case StragglerMode::FixedCount: return std::to_string(s.num_stragglers);
    case StragglerMode::DelayDeadline: return format_number(s.deadline);
    case StragglerMode::ExplicitList: {
      std::string out;
      for (std::size_t i = 0; i < s.straggler_indices.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(s.straggler_indices[i]);
      }
      return out;
    }
  }
  return {};
}

struct Plan {
  std::vector<Scheme> schemes;
  std::vector<std::pair<double, double>> lambdas;  // (enc, dec)
  std::vector<StragglerConfig> settings;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
};

struct EngineResult {
  std::vector<MetricsRow> rows;  // (scheme, setting, lambda, trial) order
  std::vector<double> output_scale;  // per trial: mean squared norm of f(x_k)
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  // Report the failure of the lowest trial so errors are reproducible too.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EngineResult run_engine(const ExperimentConfig& cfg, const Plan& plan) {
  const DataSource source(cfg.dataset);
  if (source.from_file() && source.pool_rows() < static_cast<Eigen::Index>(cfg.K)) {
    throw Error(ErrorCode::ConfigInvalid, "dataset has " + std::to_string(source.pool_rows()) +
                                              " rows, fewer than K = " + std::to_string(cfg.K));
  }
  const ComputeModel model = build_model(cfg, source.dim());
  const NodeSet alphas = alpha_points(cfg.K);
  const NodeSet betas = beta_points(cfg.N);
  const std::vector<double> alpha_values(alphas.values().begin(), alphas.values().end());

  const std::size_t S = plan.schemes.size(), G = plan.settings.size(), L = plan.lambdas.size();
  const std::size_t T = plan.trials;
  auto slot = [&](std::size_t sc, std::size_t g, std::size_t l, std::size_t t) {
    return ((sc * G + g) * L + l) * T + t;
  };
  EngineResult result;
  result.rows.resize(S * G * L * T);
  result.output_scale.resize(T);

  parallel_for(T, cfg.threads, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(plan.base_seed, t);
    const TrialData data = source.draw(derive_seed(trial_seed, kDataStream ^ cfg.dataset.seed), alphas);
    const Matrix f_x = model.apply(data.x);
    result.output_scale[t] = f_x.squaredNorm() / static_cast<double>(cfg.K);
    std::optional<double> grad;
    if (cfg.compute_grad) grad = estimate_grad_infnorm(model, data.x, cfg.grad_h);

    // Survivor sets are shared by every scheme and lambda of this trial.
    std::vector<std::vector<std::size_t>> survivors(G);
    for (std::size_t g = 0; g < G; ++g) {
      std::vector<double> arrivals;
      survivors[g] = select_survivors(plan.settings[g], cfg.N, derive_seed(trial_seed, kStragglerStream + g),
                                      arrivals);
    }

    for (std::size_t sc = 0; sc < S; ++sc) {
      for (std::size_t l = 0; l < L; ++l) {
        SchemeConfig scheme{plan.schemes[sc], SmoothingParam(plan.lambdas[l].first),
                            SmoothingParam(plan.lambdas[l].second)};
        const auto start = std::chrono::steady_clock::now();
        const CodedBatch coded = encode(data.x, alphas, betas, scheme);
        const Matrix worker_out = model.apply(coded.coded);
        const double encode_ms = elapsed_ms(start);

        const Matrix enc_alpha = encoder_at(data.x, alphas, alpha_values, scheme);
        const double enc_sse = (enc_alpha - data.x).squaredNorm();
        const Matrix f_enc = model.apply(enc_alpha);
        std::optional<double> roughness;
        if (cfg.N >= 3) roughness = batch_roughness(coded.coded);

        for (std::size_t g = 0; g < G; ++g) {
          MetricsRow& row = result.rows[slot(sc, g, l, t)];
          row.trial = t;
          row.scheme = scheme.scheme;
          row.N = cfg.N;
          row.K = cfg.K;
          row.S_size = static_cast<double>(survivors[g].size());
          row.lambda_enc = scheme.effective_lambda_enc().value();
          row.lambda_dec = scheme.effective_lambda_dec().value();
          row.stragglers = setting_label(plan.settings[g]);
          row.enc_train_sse = enc_sse;
          row.coded_roughness = roughness;
          row.grad_infnorm = grad;
          if (survivors[g].size() < min_survivors(scheme)) {
            row.status = to_string(ErrorCode::DecodingInfeasible);
            continue;
          }

          const auto decode_start = std::chrono::steady_clock::now();
          SurvivorResults sr{survivors[g], Matrix(static_cast<Eigen::Index>(survivors[g].size()),
                                                  worker_out.cols())};
          for (std::size_t r = 0; r < survivors[g].size(); ++r) {
            sr.outputs.row(static_cast<Eigen::Index>(r)) =
                worker_out.row(static_cast<Eigen::Index>(survivors[g][r]));
          }
          const Matrix decoded = decode(sr, betas, alphas, scheme);
          if (cfg.record_runtime) row.runtime_ms = encode_ms + elapsed_ms(decode_start);

          row.mse = mse(f_x, decoded);
          if (f_x.cols() >= 2) {
            const RelAcc plain = rel_acc(f_x, decoded);
            row.agreement = plain.agreement;
            row.rel_acc = plain.agreement;
            if (!data.labels.empty()) {
              try {
                row.rel_acc = rel_acc(f_x, decoded, std::span<const int>(data.labels)).ratio;
              } catch (const Error& e) {
                if (e.code() != ErrorCode::ZeroBaseAccuracy) throw;
                row.rel_acc.reset();
              }
            }
          }
          const Decomposition dec = decomposition(decoded, f_enc, f_x);
          row.l2_loss = dec.l2_loss;
          row.term1 = dec.term1;
          row.term2 = dec.term2;
          if (!(dec.l2_loss <= dec.term1 + dec.term2 + kTriangleSlack)) {
            throw Error(ErrorCode::InvariantViolation,
                        "l2_loss " + format_number(dec.l2_loss) + " exceeds term1 + term2 = " +
                            format_number(dec.term1 + dec.term2) + " (trial " + std::to_string(t) +
                            ", " + std::string(to_string(scheme.scheme)) + ")");
          }
        }
      }
    }
  });
  return result;
}

std::optional<double> median_of(const std::vector<const MetricsRow*>& rows,
                                std::optional<double> MetricsRow::*field) {
  std::vector<double> values;
  for (const auto* r : rows) {
    if (r->*field) values.push_back(*(r->*field));
  }
  if (values.empty()) return std::nullopt;
  return median(std::move(values));
}

MetricsRow summarize(const std::vector<const MetricsRow*>& group, std::string stragglers) {
  MetricsRow s;
  const MetricsRow& first = *group.front();
  s.scheme = first.scheme;
  s.N = first.N;
  s.K = first.K;
  s.lambda_enc = first.lambda_enc;
  s.lambda_dec = first.lambda_dec;
  s.stragglers = std::move(stragglers);
  s.row_type = "summary";

  std::vector<double> sizes;
  std::vector<const MetricsRow*> ok;
  for (const auto* r : group) {
    sizes.push_back(r->S_size);
    if (r->status == "ok") ok.push_back(r);
  }
  s.S_size = median(std::move(sizes));
  if (ok.empty()) {
    s.status = to_string(ErrorCode::DecodingInfeasible);
    return s;
  }
  for (auto field : {&MetricsRow::mse, &MetricsRow::rel_acc, &MetricsRow::agreement, &MetricsRow::term1,
                     &MetricsRow::term2, &MetricsRow::l2_loss, &MetricsRow::enc_train_sse,
                     &MetricsRow::coded_roughness, &MetricsRow::grad_infnorm, &MetricsRow::runtime_ms}) {
    s.*field = median_of(ok, field);
  }
  return s;
}

// One summary row per consecutive block of `trials` detail rows.
std::vector<MetricsRow> summaries(const std::vector<MetricsRow>& rows, std::size_t trials) {
  std::vector<MetricsRow> out;
  for (std::size_t begin = 0; begin < rows.size(); begin += trials) {
    std::vector<const MetricsRow*> group;
    for (std::size_t i = begin; i < begin + trials; ++i) group.push_back(&rows[i]);
    out.push_back(summarize(group, rows[begin].stragglers));
  }
  return out;
}

Plan base_plan(const ExperimentConfig& cfg) {
  Plan plan;
  plan.schemes = cfg.schemes;
  plan.lambdas = {{cfg.lambda_enc, cfg.lambda_dec}};
  plan.settings = cfg.stragglers;
  plan.trials = cfg.trials;
  plan.base_seed = derive_seed(cfg.seed, kTrialStream);
  return plan;
}

std::vector<double> grid_or_default(const std::vector<double>& grid) {
  return grid.empty() ? default_lambda_grid() : grid;
}

void write_rows(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  write_text_file(path, to_csv(metrics_table(rows)));
}

// Renders a plot from rows already in memory; a plot with nothing to draw
// is skipped rather than written empty.
void plot_rows(const std::vector<MetricsRow>& rows, const PlotOptions& options,
               const std::filesystem::path& output) {
  std::string svg;
  try {
    svg = render_svg(metrics_table(rows), options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyInput) return;
    throw;
  }
  write_text_file(output, svg);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::Normal: return "normal";
    case DatasetKind::SmoothCurve: return "smooth-curve";
    case DatasetKind::Linear: return "linear";
    case DatasetKind::Csv: return "csv";
    case DatasetKind::Ntf: return "ntf";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::Normal, DatasetKind::SmoothCurve, DatasetKind::Linear, DatasetKind::Csv,
                 DatasetKind::Ntf}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown dataset kind '" + std::string(name) + "'");
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid = {0.0};
  for (int e = -6; e <= 2; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

void ExperimentConfig::validate() const {
  if (N < 2) config_error("N must be at least 2");
  if (K < 3) config_error("K must be at least 3");
  if (trials < 1) config_error("trials must be at least 1");
  if (schemes.empty()) config_error("at least one scheme is required");
  if (stragglers.empty()) config_error("at least one straggler setting is required");
  for (const auto& s : stragglers) s.validate(N);
  for (double l : {lambda_enc, lambda_dec}) {
    if (!(l >= 0.0) || !std::isfinite(l)) config_error("lambda_enc and lambda_dec must be finite and >= 0");
  }
  for (const auto* grid : {&lambda_enc_grid, &lambda_dec_grid}) {
    if (grid->empty()) continue;  // default grid
    for (double l : *grid) {
      if (!(l >= 0.0) || !std::isfinite(l)) config_error("lambda grids must be finite and >= 0");
    }
    if (std::find(grid->begin(), grid->end(), 0.0) == grid->end()) {
      config_error("lambda grids must contain 0");
    }
  }
  const bool file = dataset.kind == DatasetKind::Csv || dataset.kind == DatasetKind::Ntf;
  if (file && dataset.path.empty()) config_error("file datasets need a 'path'");
  if (!file && dataset.d < 1) config_error("dataset d must be positive");
  if (dataset.kind == DatasetKind::SmoothCurve && dataset.terms < 1) config_error("terms must be positive");
  if (!dataset.label_column.empty() && dataset.kind != DatasetKind::Csv) {
    config_error("label_column is only meaningful for csv datasets");
  }
  if (!(grad_h > 0.0)) config_error("grad_h must be positive");
  if (model_manifest.empty() && model.m < 1) config_error("model m must be positive");
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) config_error("config must be a JSON object");
    reject_unknown_keys(doc,
                        {"N", "K", "schemes", "model", "dataset", "stragglers", "lambda_enc", "lambda_dec",
                         "lambda_enc_grid", "lambda_dec_grid", "sweep_axis", "trials", "seed", "output_dir",
                         "compute_grad", "grad_h", "record_runtime", "threads"},
                        "config");
    if (doc.contains("N")) cfg.N = doc["N"].get<std::size_t>();
    if (doc.contains("K")) cfg.K = doc["K"].get<std::size_t>();
    if (doc.contains("schemes")) {
      cfg.schemes.clear();
      for (const auto& s : doc["schemes"].get<std::vector<std::string>>()) cfg.schemes.push_back(parse_scheme(s));
    }
    if (doc.contains("model")) parse_model(doc["model"], cfg, base_dir);
    if (doc.contains("dataset")) parse_dataset(doc["dataset"], cfg, base_dir);
    if (doc.contains("stragglers")) parse_stragglers(doc["stragglers"], cfg);
    if (doc.contains("lambda_enc")) cfg.lambda_enc = doc["lambda_enc"].get<double>();
    if (doc.contains("lambda_dec")) cfg.lambda_dec = doc["lambda_dec"].get<double>();
    if (doc.contains("lambda_enc_grid")) cfg.lambda_enc_grid = parse_grid(doc["lambda_enc_grid"], "lambda_enc_grid");
    if (doc.contains("lambda_dec_grid")) cfg.lambda_dec_grid = parse_grid(doc["lambda_dec_grid"], "lambda_dec_grid");
    if (doc.contains("sweep_axis")) {
      const auto axis = doc["sweep_axis"].get<std::string>();
      if (axis != "enc" && axis != "dec") config_error("sweep_axis must be 'enc' or 'dec'");
      cfg.sweep_enc = axis == "enc";
    }
    if (doc.contains("trials")) cfg.trials = doc["trials"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
    if (doc.contains("compute_grad")) cfg.compute_grad = doc["compute_grad"].get<bool>();
    if (doc.contains("grad_h")) cfg.grad_h = doc["grad_h"].get<double>();
    if (doc.contains("record_runtime")) cfg.record_runtime = doc["record_runtime"].get<bool>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<unsigned>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "trial", "scheme", "N", "K", "S_size", "lambda_enc", "lambda_dec", "mse", "rel_acc", "agreement",
      "term1", "term2", "l2_loss", "enc_train_sse", "coded_roughness", "grad_infnorm", "runtime_ms",
      "stragglers", "status", "row_type"};
  return cols;
}

CsvTable metrics_table(const std::vector<MetricsRow>& rows) {
  CsvTable table;
  table.header = metrics_columns();
  for (const auto& r : rows) {
    table.rows.push_back({r.trial ? std::to_string(*r.trial) : std::string(),
                          std::string(to_string(r.scheme)),
                          std::to_string(r.N),
                          std::to_string(r.K),
                          format_number(r.S_size),
                          format_number(r.lambda_enc),
                          format_number(r.lambda_dec),
                          format_number(r.mse),
                          format_number(r.rel_acc),
                          format_number(r.agreement),
                          format_number(r.term1),
                          format_number(r.term2),
                          format_number(r.l2_loss),
                          format_number(r.enc_train_sse),
                          format_number(r.coded_roughness),
                          format_number(r.grad_infnorm),
                          format_number(r.runtime_ms),
                          r.stragglers,
                          r.status,
                          r.row_type});
  }
  return table;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  auto rows = run_engine(config, base_plan(config)).rows;
  write_rows(config.output_dir / "run.csv", rows);
  return rows;
}

std::vector<MetricsRow> sweep_stragglers(const ExperimentConfig& config) {
  config.validate();
  auto rows = run_engine(config, base_plan(config)).rows;
  auto summary = summaries(rows, config.trials);
  rows.insert(rows.end(), summary.begin(), summary.end());
  write_rows(config.output_dir / "sweep_stragglers.csv", rows);

  // Fixed counts and deadlines are numeric; explicit lists fall back to |S|.
  const bool numeric = std::all_of(config.stragglers.begin(), config.stragglers.end(), [](const auto& s) {
    return s.mode != StragglerMode::ExplicitList;
  });
  PlotOptions opts;
  opts.x_column = numeric ? "stragglers" : "S_size";
  opts.group_column = "scheme";
  opts.filter = std::pair<std::string, std::string>("row_type", "summary");
  opts.y_column = "mse";
  opts.title = "median MSE";
  plot_rows(rows, opts, config.output_dir / "sweep_stragglers_mse.svg");
  opts.y_column = "agreement";
  opts.title = "median agreement";
  plot_rows(rows, opts, config.output_dir / "sweep_stragglers_agreement.svg");
  return rows;
}

std::vector<MetricsRow> sweep_lambda(const ExperimentConfig& config) {
  config.validate();
  Plan plan = base_plan(config);
  plan.schemes = {Scheme::Nercc};
  plan.lambdas.clear();
  for (double l : grid_or_default(config.sweep_enc ? config.lambda_enc_grid : config.lambda_dec_grid)) {
    plan.lambdas.push_back(config.sweep_enc ? std::pair(l, config.lambda_dec) : std::pair(config.lambda_enc, l));
  }
  auto rows = run_engine(config, plan).rows;
  auto summary = summaries(rows, config.trials);
  rows.insert(rows.end(), summary.begin(), summary.end());
  write_rows(config.output_dir / "sweep_lambda.csv", rows);

  PlotOptions opts;
  opts.x_column = config.sweep_enc ? "lambda_enc" : "lambda_dec";
  opts.y_column = "mse";
  opts.group_column = "stragglers";
  opts.filter = std::pair<std::string, std::string>("row_type", "summary");
  opts.log_x = true;
  opts.title = "median MSE";
  plot_rows(rows, opts, config.output_dir / "sweep_lambda.svg");
  return rows;
}

TuneResult tune_lambdas(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> enc = grid_or_default(config.lambda_enc_grid);
  std::vector<double> dec = grid_or_default(config.lambda_dec_grid);
  for (auto* g : {&enc, &dec}) {
    std::sort(g->begin(), g->end());
    g->erase(std::unique(g->begin(), g->end()), g->end());
  }

  Plan plan = base_plan(config);
  plan.schemes = {Scheme::Nercc};
  plan.base_seed = derive_seed(config.seed, kValidationStream);
  plan.lambdas.clear();
  for (double e : enc) {
    for (double d : dec) plan.lambdas.emplace_back(e, d);
  }
  EngineResult engine = run_engine(config, plan);

  // Pool every straggler setting and trial of a pair into one median.
  const std::size_t G = plan.settings.size(), L = plan.lambdas.size(), T = plan.trials;
  std::string pooled_label = G == 1 ? setting_label(plan.settings[0]) : std::string("all");
  std::vector<MetricsRow> pair_summary;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<const MetricsRow*> group;
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t t = 0; t < T; ++t) group.push_back(&engine.rows[(g * L + l) * T + t]);
    }
    pair_summary.push_back(summarize(group, pooled_label));
  }

  const double tolerance = kTieTolerance * std::max(1.0, median(engine.output_scale));
  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < L; ++l) {
    if (!pair_summary[l].mse) continue;
    if (!best || *pair_summary[l].mse < *pair_summary[*best].mse - tolerance) best = l;
  }
  if (!best) throw Error(ErrorCode::DecodingInfeasible, "no lambda pair could be decoded on any validation trial");

  TuneResult result;
  result.lambda_enc = plan.lambdas[*best].first;
  result.lambda_dec = plan.lambdas[*best].second;
  result.median_mse = *pair_summary[*best].mse;
  result.rows = std::move(engine.rows);
  result.rows.insert(result.rows.end(), pair_summary.begin(), pair_summary.end());
  write_rows(config.output_dir / "tune.csv", result.rows);

  json best_doc = {{"lambda_enc", result.lambda_enc},
                   {"lambda_dec", result.lambda_dec},
                   {"median_mse", result.median_mse}};
  write_text_file(config.output_dir / "tune_best.json", best_doc.dump(2) + "\n");
  return result;
}

ExperimentConfig demo_config() {
  ExperimentConfig cfg;
  cfg.N = 60;
  cfg.K = 15;
  cfg.schemes = {Scheme::Nercc, Scheme::NerccAg, Scheme::Bacc};
  cfg.model.kind = ModelKind::RbfMixture;
  cfg.model.m = 4;
  cfg.dataset.kind = DatasetKind::Normal;
  cfg.dataset.d = 6;
  cfg.stragglers = {StragglerConfig::fixed_count(0), StragglerConfig::fixed_count(10),
                    StragglerConfig::fixed_count(20), StragglerConfig::fixed_count(30),
                    StragglerConfig::fixed_count(40)};
  cfg.lambda_dec = 1e-6;
  cfg.trials = 10;
  cfg.output_dir = "demo_out";
  return cfg;
}

}  // namespace nercc
