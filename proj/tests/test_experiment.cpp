#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nercc/cli.hpp"
#include "nercc/error.hpp"
#include "nercc/experiment.hpp"
#include "nercc/tensor_io.hpp"
#include "test_support.hpp"

using namespace nercc;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvariantViolation;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nercc_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.N = 20;
  cfg.K = 6;
  cfg.schemes = {Scheme::Nercc, Scheme::Bacc};
  cfg.model.kind = ModelKind::AffineSoftmax;
  cfg.model.m = 3;
  cfg.dataset.d = 4;
  cfg.trials = 2;
  cfg.seed = 11;
  cfg.output_dir = scratch(name);
  return cfg;
}

std::vector<MetricsRow> of_type(const std::vector<MetricsRow>& rows, const std::string& type) {
  std::vector<MetricsRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const MetricsRow& r) { return r.row_type == type; });
  return out;
}

}  // namespace

TEST_CASE("run_experiment emits one row per scheme, setting and trial") {
  const auto cfg = small_config("cardinality");
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].scheme == Scheme::Nercc);
  CHECK(rows[2].scheme == Scheme::Bacc);
  CHECK(*rows[0].trial == 0);
  CHECK(*rows[1].trial == 1);
  for (const auto& r : rows) {
    CHECK(r.status == "ok");
    CHECK(*r.mse >= 0.0);
    CHECK(*r.agreement >= 0.0);
    CHECK(*r.agreement <= 1.0);
    CHECK(*r.l2_loss <= *r.term1 + *r.term2 + 1e-9);
    // Exact interpolation by the encoder leaves nothing for term2.
    CHECK(*r.term2 <= 1e-12);
    CHECK_FALSE(r.runtime_ms.has_value());
  }

  const auto csv = slurp(cfg.output_dir / "run.csv");
  CHECK(csv.rfind("trial,scheme,N,K,S_size,lambda_enc,lambda_dec,mse,rel_acc,agreement,term1,term2,"
                  "l2_loss,enc_train_sse,coded_roughness,grad_infnorm,runtime_ms,stragglers,status,"
                  "row_type\r\n",
                  0) == 0);
}

TEST_CASE("reruns are byte-identical regardless of thread count") {
  auto cfg = small_config("determinism_a");
  cfg.trials = 6;
  cfg.stragglers = {StragglerConfig::fixed_count(3), StragglerConfig::delay_deadline(0.0, 1.0, 1.5)};
  cfg.threads = 1;
  sweep_stragglers(cfg);
  const auto first = slurp(cfg.output_dir / "sweep_stragglers.csv");
  const auto first_svg = slurp(cfg.output_dir / "sweep_stragglers_mse.svg");

  cfg.output_dir = scratch("determinism_b");
  cfg.threads = 4;
  sweep_stragglers(cfg);
  CHECK(slurp(cfg.output_dir / "sweep_stragglers.csv") == first);
  CHECK(slurp(cfg.output_dir / "sweep_stragglers_mse.svg") == first_svg);

  cfg.seed += 1;
  sweep_stragglers(cfg);
  CHECK(slurp(cfg.output_dir / "sweep_stragglers.csv") != first);
}

TEST_CASE("schemes within a trial share data and survivors") {
  auto cfg = small_config("paired");
  cfg.schemes = {Scheme::Nercc, Scheme::NerccAg};
  cfg.stragglers = {StragglerConfig::fixed_count(5)};
  cfg.trials = 3;
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 6);
  // With both lambdas at zero the two schemes are the same computation.
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(*rows[t].mse == *rows[t + 3].mse);
    CHECK(*rows[t].l2_loss == *rows[t + 3].l2_loss);
    CHECK(rows[t].S_size == 15.0);
  }
}

TEST_CASE("too few survivors are flagged and the run continues") {
  auto cfg = small_config("infeasible");
  cfg.N = 5;
  cfg.stragglers = {StragglerConfig::fixed_count(3)};
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.S_size == 2.0);
    if (r.scheme == Scheme::Nercc) {
      CHECK(r.status == "DecodingInfeasible");
      CHECK_FALSE(r.mse.has_value());
    } else {
      CHECK(r.status == "ok");
      CHECK(r.mse.has_value());
    }
  }
  const auto summary = of_type(sweep_stragglers(cfg), "summary");
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].status == "DecodingInfeasible");
  CHECK(summary[1].status == "ok");
}

TEST_CASE("sweep_lambda cardinality and the reference point") {
  auto cfg = small_config("sweep_lambda");
  cfg.trials = 3;
  cfg.stragglers = {StragglerConfig::fixed_count(4)};
  cfg.lambda_dec_grid = {0.0, 1e-6, 1e-4, 1e-2, 1.0};
  const auto rows = sweep_lambda(cfg);
  CHECK(of_type(rows, "detail").size() == 15);
  const auto summary = of_type(rows, "summary");
  REQUIRE(summary.size() == 5);
  CHECK(fs::exists(cfg.output_dir / "sweep_lambda.svg"));
  double best = *summary[0].mse;
  for (const auto& s : summary) {
    CHECK(s.scheme == Scheme::Nercc);
    best = std::min(best, *s.mse);
  }
  CHECK(best <= *summary[0].mse);
}

TEST_CASE("sweep_lambda over the grid {0} matches a plain run") {
  auto cfg = small_config("grid_zero");
  cfg.schemes = {Scheme::Nercc};
  cfg.trials = 3;
  cfg.lambda_dec_grid = {0.0};
  const auto rows = sweep_lambda(cfg);
  const auto plain = run_experiment(cfg);
  const auto detail = of_type(rows, "detail");
  REQUIRE(detail.size() == plain.size());
  std::vector<double> mses;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(*detail[i].mse == *plain[i].mse);
    mses.push_back(*plain[i].mse);
  }
  std::sort(mses.begin(), mses.end());
  CHECK(*of_type(rows, "summary").at(0).mse == mses[1]);
}

TEST_CASE("tune_lambdas tie-break and degenerate grids") {
  auto cfg = small_config("tune_zero");
  cfg.lambda_enc_grid = {0.0};
  cfg.lambda_dec_grid = {0.0};
  auto r = tune_lambdas(cfg);
  CHECK(r.lambda_enc == 0.0);
  CHECK(r.lambda_dec == 0.0);
  CHECK(fs::exists(cfg.output_dir / "tune.csv"));
  CHECK(fs::exists(cfg.output_dir / "tune_best.json"));

  // Linear-in-node data lies in the penalty null space of both regressions,
  // so every pair ties and the smallest wins.
  cfg = small_config("tune_linear");
  cfg.model.kind = ModelKind::Identity;
  cfg.dataset.kind = DatasetKind::Linear;
  cfg.stragglers = {StragglerConfig::fixed_count(5)};
  cfg.lambda_enc_grid = {1.0, 0.0, 1e-3};
  cfg.lambda_dec_grid = {0.0, 10.0};
  r = tune_lambdas(cfg);
  CHECK(r.lambda_enc == 0.0);
  CHECK(r.lambda_dec == 0.0);
  CHECK(r.median_mse < 1e-18);
  CHECK(of_type(r.rows, "summary").size() == 6);
}

TEST_CASE("tuning trials are separate from run trials") {
  auto cfg = small_config("tune_stream");
  cfg.schemes = {Scheme::Nercc};
  cfg.lambda_enc_grid = {0.0};
  cfg.lambda_dec_grid = {0.0};
  const auto run = run_experiment(cfg);
  const auto tuned = tune_lambdas(cfg);
  CHECK(*run[0].mse != *tuned.rows[0].mse);
}

TEST_CASE("config parsing") {
  const auto dir = scratch("config");
  const auto cfg = parse_config(R"({
    "N": 30, "K": 7, "schemes": ["nercc-ag", "bacc"],
    "model": {"kind": "mlp", "m": 2, "hidden": [5, 5], "activation": "relu"},
    "dataset": {"kind": "smooth-curve", "d": 3, "terms": 2},
    "stragglers": {"mode": "delay-deadline", "t0": 0.5, "mean": 2, "deadlines": [1, 2]},
    "lambda_dec_grid": [0, 0.5], "sweep_axis": "enc", "trials": 4, "seed": 99,
    "output_dir": "results", "record_runtime": true
  })",
                                dir);
  CHECK(cfg.N == 30);
  CHECK(cfg.schemes == std::vector<Scheme>{Scheme::NerccAg, Scheme::Bacc});
  CHECK(cfg.model.kind == ModelKind::Mlp);
  CHECK(cfg.model.hidden == std::vector<Eigen::Index>{5, 5});
  CHECK(cfg.dataset.kind == DatasetKind::SmoothCurve);
  REQUIRE(cfg.stragglers.size() == 2);
  CHECK(cfg.stragglers[1].deadline == 2.0);
  CHECK(cfg.stragglers[0].base_delay == 0.5);
  CHECK(cfg.sweep_enc);
  CHECK(cfg.output_dir == dir / "results");
  CHECK(cfg.record_runtime);
  CHECK(default_lambda_grid().size() == 10);

  CHECK(code_of([&] { parse_config(R"({"N": 10, "typo": 1})", dir); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([&] { parse_config(R"({"N": "ten"})", dir); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([&] { parse_config("{", dir); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([&] { parse_config(R"({"schemes": ["lcc"]})", dir); }) == ErrorCode::ConfigInvalid);

  auto bad = parse_config(R"({"lambda_dec_grid": [1e-3, 1]})", dir);
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigInvalid);
  bad = parse_config(R"({"K": 2})", dir);
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigInvalid);
  bad = parse_config(R"({"N": 10, "stragglers": {"counts": [11]}})", dir);
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::CountOutOfRange);
  bad = parse_config(R"({"lambda_enc": -1})", dir);
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("file datasets, labels and manifest models") {
  const auto dir = scratch("files");
  Rng rng(5);
  const Matrix pool = testing::random_matrix(rng, 12, 3);
  std::string csv = "f0,label,f1,f2\r\n";
  for (Eigen::Index r = 0; r < pool.rows(); ++r) {
    csv += format_number(pool(r, 0)) + "," + std::to_string(r % 2) + "," + format_number(pool(r, 1)) + "," +
           format_number(pool(r, 2)) + "\r\n";
  }
  write_text_file(dir / "data.csv", csv);
  write_ntf(dir / "data.ntf", matrix_to_tensor(pool));
  save_model(ComputeModel::linear(testing::random_matrix(rng, 2, 3)), dir / "model.json");

  write_text_file(dir / "cfg.json", R"({
    "N": 15, "K": 5, "schemes": ["nercc"], "trials": 3, "seed": 2,
    "model": {"manifest": "model.json"},
    "dataset": {"kind": "csv", "path": "data.csv", "label_column": "label"},
    "output_dir": "out"
  })");
  auto cfg = load_config(dir / "cfg.json");
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(fs::exists(dir / "out" / "run.csv"));
  for (const auto& r : rows) CHECK(r.agreement.has_value());

  cfg.dataset.kind = DatasetKind::Ntf;
  cfg.dataset.path = dir / "data.ntf";
  cfg.dataset.label_column.clear();
  const auto ntf_rows = run_experiment(cfg);
  for (const auto& r : ntf_rows) CHECK(*r.rel_acc == *r.agreement);

  cfg.K = 13;
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::ConfigInvalid);
  cfg.K = 5;
  cfg.model_manifest = dir / "missing.json";
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::ModelLoadError);

  save_model(ComputeModel::linear(testing::random_matrix(rng, 2, 4)), dir / "wide.json");
  cfg.model_manifest = dir / "wide.json";
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("gradient and runtime columns are opt-in") {
  auto cfg = small_config("optional_columns");
  cfg.compute_grad = true;
  cfg.record_runtime = true;
  const auto rows = run_experiment(cfg);
  for (const auto& r : rows) {
    CHECK(*r.grad_infnorm > 0.0);
    CHECK(*r.runtime_ms >= 0.0);
  }
}

TEST_CASE("cli subcommands") {
  const auto dir = scratch("cli");
  write_text_file(dir / "cfg.json", R"({"N": 12, "K": 4, "trials": 2, "schemes": ["nercc", "bacc"],
    "stragglers": {"counts": [0, 4]}, "lambda_enc_grid": [0, 1e-3], "lambda_dec_grid": [0, 1e-3]})");
  auto run = [&](std::vector<std::string> args) {
    std::vector<const char*> argv = {"nercc"};
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  const std::string cfg = (dir / "cfg.json").string();
  CHECK(run({"run", "--config", cfg, "--out", (dir / "run").string()}) == 0);
  CHECK(fs::exists(dir / "run" / "run.csv"));
  CHECK(run({"sweep-stragglers", "--config", cfg, "--seed", "7", "--out", (dir / "ss").string()}) == 0);
  CHECK(run({"sweep-lambda", "--config", cfg, "--out", (dir / "sl").string()}) == 0);
  CHECK(run({"tune", "--config", cfg, "--out", (dir / "tune").string()}) == 0);
  CHECK(fs::exists(dir / "tune" / "tune_best.json"));
  CHECK(run({"plot", "--csv", (dir / "ss" / "sweep_stragglers.csv").string(), "--x", "stragglers", "--y", "mse",
             "--group", "scheme", "--filter", "row_type=summary", "--out", (dir / "p.svg").string()}) == 0);
  CHECK(fs::exists(dir / "p.svg"));

  CHECK(run({}) != 0);
  CHECK(run({"run"}) != 0);
  CHECK(run({"run", "--config", (dir / "missing.json").string()}) == 1);
  CHECK(run({"plot", "--csv", (dir / "ss" / "sweep_stragglers.csv").string(), "--x", "nope", "--y", "mse",
             "--out", (dir / "q.svg").string()}) == 1);
  CHECK_FALSE(fs::exists(dir / "q.svg"));
}
