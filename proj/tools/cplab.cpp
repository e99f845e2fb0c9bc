// Command-line front end: sweeps, synthetic data export and report rebuilds.
//
// Exit codes: 0 success, 1 hard failure (including failed repetitions),
// 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cplab/config.hpp"
#include "cplab/results.hpp"
#include "cplab/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("CPLAB_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "results";
}

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::string output_dir;
  std::optional<int> workers;
  std::optional<std::size_t> repetitions;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> test_size;
  std::vector<std::size_t> sizes;
  std::vector<double> epsilons;
  std::vector<std::string> pairs;
  std::vector<std::string> noises;
  std::vector<int> dims;
  bool no_resume = false;
  bool print_config = false;
};

cplab::ExperimentConfig build_config(const RunOptions& o) {
  cplab::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    cfg = cplab::load_config(o.config_path);
  } else {
    cfg = o.preset == "full" ? cplab::ExperimentConfig::full_protocol() : cplab::ExperimentConfig::desk_preset();
    cfg.output_dir = default_output_dir();
  }
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.workers) cfg.workers = *o.workers;
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.test_size) cfg.test_size = *o.test_size;
  if (!o.sizes.empty()) cfg.sizes = o.sizes;
  if (!o.epsilons.empty()) cfg.epsilons = o.epsilons;
  if (!o.dims.empty()) cfg.dims = o.dims;
  if (!o.pairs.empty()) {
    cfg.pairs.clear();
    for (const auto& p : o.pairs) cfg.pairs.push_back(cplab::parse_pair(p));
  }
  if (!o.noises.empty()) {
    cfg.noises.clear();
    for (const auto& n : o.noises) {
      try {
        cfg.noises.push_back(cplab::parse_noise_kind(n));
      } catch (const cplab::DataError& e) {
        throw cplab::ConfigError(e.what());
      }
    }
  }
  if (o.no_resume) cfg.resume = false;
  cfg.validate();
  return cfg;
}

int run_command(const RunOptions& o) {
  const auto cfg = build_config(o);
  if (o.print_config) {
    std::cout << cplab::dump_config(cfg);
    return kOk;
  }
  cplab::Runner runner(cfg);
  const auto cells = runner.cells();
  spdlog::info("{} cells x {} repetitions -> {}", cells.size(), cfg.repetitions, cfg.output_dir.string());
  std::size_t last_pct = 0;
  runner.on_progress([&](std::size_t done, std::size_t total) {
    const std::size_t pct = total == 0 ? 100 : done * 100 / total;
    if (pct >= last_pct + 5 || done == total) {
      last_pct = pct;
      spdlog::info("{}/{} tasks ({}%)", done, total, pct);
    }
  });
  const auto result = runner.run_sweep(true);
  spdlog::info("{} rows written, {} failures, {} tasks resumed from disk", result.records.size(),
               result.failures.size(), result.tasks_skipped);
  return result.failures.empty() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction interval benchmark"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a sweep and write raw, summary and report CSVs");
  run_cmd->add_option("-c,--config", run.config_path, "YAML sweep file")->check(CLI::ExistingFile);
  run_cmd->add_option("--preset", run.preset, "Base preset when no config file is given")
      ->check(CLI::IsMember({"desk", "full"}))
      ->default_val("desk");
  run_cmd->add_option("-o,--output", run.output_dir, "Output directory (default: $CPLAB_OUTPUT_DIR or ./results)");
  run_cmd->add_option("-j,--workers", run.workers, "Parallel repetitions");
  run_cmd->add_option("-r,--repetitions", run.repetitions, "Repetitions per cell");
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--test-size", run.test_size, "Synthetic test points per repetition");
  run_cmd->add_option("--sizes", run.sizes, "Data sizes");
  run_cmd->add_option("--eps", run.epsilons, "Miscoverage levels");
  run_cmd->add_option("--pairs", run.pairs, "NCM-model pairs, e.g. NCM-NN qNCM-QR");
  run_cmd->add_option("--noises", run.noises, "homo_gauss hetero_gauss right_skew hetero_nongauss");
  run_cmd->add_option("--dims", run.dims, "Input dimensions");
  run_cmd->add_flag("--no-resume", run.no_resume, "Ignore rows already on disk");
  run_cmd->add_flag("--print-config", run.print_config, "Print the effective configuration and exit");

  cplab::SyntheticSpec gen;
  std::string gen_noise = "homo_gauss";
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write one synthetic dataset as CSV");
  gen_cmd->add_option("-d,--dim", gen.dim, "Input dimension")->default_val(1);
  gen_cmd->add_option("-n,--rows", gen.n, "Rows")->default_val(1000);
  gen_cmd->add_option("--noise", gen_noise, "Noise kind")->default_val("homo_gauss");
  gen_cmd->add_option("--level", gen.noise_level, "Noise level c")->default_val(0.3);
  gen_cmd->add_option("--seed", gen.seed, "Seed")->default_val(0);
  gen_cmd->add_option("-o,--out", gen_out, "Output CSV")->required();

  std::string raw_in, report_out;
  auto add_report = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("raw", raw_in, "raw.csv from a sweep")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", report_out, "Output CSV")->required();
    return cmd;
  };
  auto* summarize_cmd = add_report("summarize", "Recompute per-cell summaries from raw rows");
  auto* convergence_cmd = add_report("convergence", "Coverage-gap convergence report from raw rows");
  auto* outliers_cmd = add_report("outliers", "IQR outlier report from raw rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run_cmd->parsed()) return run_command(run);
    if (gen_cmd->parsed()) {
      try {
        gen.noise = cplab::parse_noise_kind(gen_noise);
        gen.validate();
      } catch (const cplab::DataError& e) {
        throw cplab::ConfigError(e.what());
      }
      cplab::write_csv(cplab::generate(gen), gen_out);
      return kOk;
    }
    const auto records = cplab::read_raw_csv(raw_in);
    if (summarize_cmd->parsed()) cplab::write_summary_csv(report_out, cplab::summarize_all(records));
    if (convergence_cmd->parsed()) cplab::write_convergence_csv(report_out, cplab::convergence_report(records));
    if (outliers_cmd->parsed()) cplab::write_outliers_csv(report_out, cplab::outlier_report(records));
    return kOk;
  } catch (const cplab::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
