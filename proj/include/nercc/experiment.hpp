#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nercc/codec.hpp"
#include "nercc/csv.hpp"
#include "nercc/models.hpp"
#include "nercc/straggler.hpp"

namespace nercc {

enum class DatasetKind { Normal, SmoothCurve, Linear, Csv, Ntf };

std::string_view to_string(DatasetKind kind) noexcept;
DatasetKind parse_dataset_kind(std::string_view name);

/// Where the K input points of each trial come from.
///
/// normal        rows i.i.d. N(0, 1)
/// smooth-curve  x_k = g(alpha_k), each coordinate a sum of `terms` random
///               sinusoids with frequencies in [0.5, 3]
/// linear        x_k = alpha_k v + c with random v, c
/// csv / ntf     K rows sampled without replacement from a file
struct DatasetSpec {
  DatasetKind kind = DatasetKind::Normal;
  Eigen::Index d = 8;
  std::uint64_t seed = 0;  // mixed into every trial's data stream
  int terms = 3;
  std::filesystem::path path;
  std::string label_column;  // csv only; optional
};

struct ExperimentConfig {
  std::size_t N = 40;
  std::size_t K = 10;
  std::vector<Scheme> schemes = {Scheme::Nercc, Scheme::NerccAg, Scheme::Bacc};

  RandomModelSpec model;  // used when model_manifest is empty; d follows the dataset
  std::filesystem::path model_manifest;

  DatasetSpec dataset;
  std::vector<StragglerConfig> stragglers = {StragglerConfig::fixed_count(0)};

  double lambda_enc = 0.0;
  double lambda_dec = 0.0;
  std::vector<double> lambda_enc_grid;  // defaults to default_lambda_grid()
  std::vector<double> lambda_dec_grid;
  bool sweep_enc = false;  // sweep_lambda varies lambda_enc instead of lambda_dec

  std::size_t trials = 5;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  bool compute_grad = false;
  double grad_h = 1e-5;
  bool record_runtime = false;  // off by default so CSV output is reproducible
  unsigned threads = 0;         // trial-level parallelism, 0 = hardware concurrency

  /// Throws ConfigInvalid (or the straggler validation codes).
  void validate() const;
};

/// {0} together with 10^e for e = -6..2.
std::vector<double> default_lambda_grid();

/// Parses a JSON document. Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One CSV record. Optional fields are written as empty cells.
struct MetricsRow {
  std::optional<std::size_t> trial;  // empty on summary rows
  Scheme scheme = Scheme::Nercc;
  std::size_t N = 0;
  std::size_t K = 0;
  double S_size = 0.0;  // a median on summary rows
  double lambda_enc = 0.0;
  double lambda_dec = 0.0;
  std::optional<double> mse;
  std::optional<double> rel_acc;
  std::optional<double> agreement;
  std::optional<double> term1;
  std::optional<double> term2;
  std::optional<double> l2_loss;
  std::optional<double> enc_train_sse;
  std::optional<double> coded_roughness;
  std::optional<double> grad_infnorm;
  std::optional<double> runtime_ms;
  std::string stragglers;  // the straggler setting
  std::string status = "ok";
  std::string row_type = "detail";
};

/// Column names in output order.
const std::vector<std::string>& metrics_columns();
CsvTable metrics_table(const std::vector<MetricsRow>& rows);

/// One row per (scheme, straggler setting, trial) at the configured lambdas.
/// Writes `<output_dir>/run.csv`.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& config);

/// run_experiment plus one median row per (scheme, setting). Writes
/// sweep_stragglers.csv, sweep_stragglers_mse.svg and
/// sweep_stragglers_agreement.svg.
std::vector<MetricsRow> sweep_stragglers(const ExperimentConfig& config);

/// NeRCC over one lambda grid (lambda_dec_grid, or lambda_enc_grid when
/// sweep_enc), the other lambda fixed. Detail rows per grid point and trial,
/// then one median row per grid point. Writes sweep_lambda.csv/.svg.
std::vector<MetricsRow> sweep_lambda(const ExperimentConfig& config);

struct TuneResult {
  double lambda_enc = 0.0;
  double lambda_dec = 0.0;
  double median_mse = 0.0;
  std::vector<MetricsRow> rows;
};

/// Exhaustive NeRCC grid search over lambda_enc_grid x lambda_dec_grid on
/// validation trials drawn from a seed stream separate from run_experiment.
/// Picks the smallest median MSE; near-ties (within 1e-12 of the mean squared
/// output norm) go to the lexicographically smallest pair. Writes tune.csv
/// and tune_best.json.
TuneResult tune_lambdas(const ExperimentConfig& config);

/// Small built-in configuration used by the `demo` subcommand.
ExperimentConfig demo_config();

}  // namespace nercc
