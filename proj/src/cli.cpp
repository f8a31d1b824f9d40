#include "nercc/cli.hpp"

#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nercc/error.hpp"
#include "nercc/experiment.hpp"
#include "nercc/svg_plot.hpp"

namespace nercc {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", flags.seed, "master seed, overrides the config");
  cmd->add_option("--out", flags.out, "output directory, overrides the config");
}

ExperimentConfig resolve_config(const CommonFlags& flags, bool allow_default) {
  ExperimentConfig cfg = flags.config.empty() && allow_default ? demo_config() : load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  return cfg;
}

std::size_t count_status(const std::vector<MetricsRow>& rows, std::string_view status) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.row_type == "detail" && r.status == status;
  return n;
}

void report(std::ostream& out, const std::vector<MetricsRow>& rows, const std::filesystem::path& dir) {
  out << rows.size() << " rows written to " << dir.string() << "\n";
  const auto infeasible = count_status(rows, to_string(ErrorCode::DecodingInfeasible));
  if (infeasible > 0) out << infeasible << " rows could not be decoded (too few survivors)\n";
}

void print_summary(std::ostream& out, const std::vector<MetricsRow>& rows) {
  for (const auto& r : rows) {
    if (r.row_type != "summary") continue;
    out << "  " << to_string(r.scheme) << "  stragglers=" << r.stragglers
        << "  lambda=(" << format_number(r.lambda_enc) << ", " << format_number(r.lambda_dec) << ")"
        << "  median mse=" << (r.mse ? format_number(r.mse) : std::string("n/a")) << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested-regression coded computing experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, stragglers_flags, lambda_flags, tune_flags, demo_flags;
  auto* run = app.add_subcommand("run", "one row per scheme, straggler setting and trial");
  add_common(run, run_flags, true);
  auto* sweep_s = app.add_subcommand("sweep-stragglers", "straggler sweep with median summaries and plots");
  add_common(sweep_s, stragglers_flags, true);
  auto* sweep_l = app.add_subcommand("sweep-lambda", "NeRCC smoothing-parameter sweep");
  add_common(sweep_l, lambda_flags, true);
  auto* tune = app.add_subcommand("tune", "grid search for the smoothing parameters");
  add_common(tune, tune_flags, true);
  auto* demo = app.add_subcommand("demo", "small built-in straggler sweep");
  add_common(demo, demo_flags, false);

  PlotOptions plot_opts;
  std::string plot_csv, plot_out, plot_filter;
  auto* plot = app.add_subcommand("plot", "render a CSV column pair as an SVG line chart");
  plot->add_option("--csv", plot_csv, "input CSV")->required();
  plot->add_option("--x", plot_opts.x_column, "x column")->required();
  plot->add_option("--y", plot_opts.y_column, "y column")->required();
  plot->add_option("--group", plot_opts.group_column, "group column (one line per value)");
  plot->add_option("--filter", plot_filter, "keep rows where COLUMN=VALUE");
  plot->add_flag("--log-x", plot_opts.log_x, "logarithmic x axis");
  plot->add_option("--title", plot_opts.title, "chart title");
  plot->add_option("--out", plot_out, "output SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run->parsed()) {
      const auto cfg = resolve_config(run_flags, false);
      report(out, run_experiment(cfg), cfg.output_dir);
    } else if (sweep_s->parsed()) {
      const auto cfg = resolve_config(stragglers_flags, false);
      const auto rows = sweep_stragglers(cfg);
      report(out, rows, cfg.output_dir);
      print_summary(out, rows);
    } else if (sweep_l->parsed()) {
      const auto cfg = resolve_config(lambda_flags, false);
      const auto rows = sweep_lambda(cfg);
      report(out, rows, cfg.output_dir);
      print_summary(out, rows);
    } else if (tune->parsed()) {
      const auto cfg = resolve_config(tune_flags, false);
      const auto result = tune_lambdas(cfg);
      report(out, result.rows, cfg.output_dir);
      out << "best lambda_enc=" << format_number(result.lambda_enc)
          << " lambda_dec=" << format_number(result.lambda_dec)
          << " median mse=" << format_number(result.median_mse) << "\n";
    } else if (demo->parsed()) {
      const auto cfg = resolve_config(demo_flags, true);
      const auto rows = sweep_stragglers(cfg);
      report(out, rows, cfg.output_dir);
      print_summary(out, rows);
    } else if (plot->parsed()) {
      if (!plot_filter.empty()) {
        const auto eq = plot_filter.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorCode::ConfigInvalid, "--filter expects COLUMN=VALUE");
        }
        plot_opts.filter = std::pair(plot_filter.substr(0, eq), plot_filter.substr(eq + 1));
      }
      render_plot(plot_csv, plot_opts, plot_out);
      out << "wrote " << plot_out << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nercc
