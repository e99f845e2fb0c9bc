#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cplab/config.hpp"
#include "cplab/eval.hpp"
#include "cplab/results.hpp"

namespace cplab {

/// The data-generating part of a cell: everything that decides which rows a
/// repetition sees. Pairs and miscoverage levels share it.
struct DataCell {
  std::string dataset;
  std::string noise;  // "-" for CSV data
  int d = 1;
  std::size_t n = 0;

  auto operator<=>(const DataCell&) const = default;
  std::string id() const;
};

/// base_seed + a stable hash of (data cell, repetition). Pairs and
/// miscoverage levels in the same data cell share the seed, so they are
/// compared on identical rows.
std::uint64_t repetition_seed(std::uint64_t base_seed, const DataCell& cell, std::size_t rep);

/// Every cell the configuration sweeps, in output order. `csv_dim` is the
/// feature count of CSV data and is ignored for synthetic sweeps.
std::vector<CellKey> enumerate_cells(const ExperimentConfig& cfg, int csv_dim = 0);

struct SweepResult {
  std::vector<MetricsRecord> records;   // successful rows, sorted
  std::vector<MetricsRecord> failures;  // rows whose fit or prediction threw
  std::vector<CellSummary> summaries;
  std::vector<ConvergenceSeries> convergence;
  std::vector<OutlierRow> outliers;
  std::size_t tasks_run = 0;      // (data cell, rep) units executed this call
  std::size_t tasks_skipped = 0;  // already complete on disk
};

class Runner {
 public:
  /// Loads CSV data up front when the configuration names a file.
  explicit Runner(ExperimentConfig cfg);

  const ExperimentConfig& config() const noexcept { return cfg_; }
  std::vector<CellKey> cells() const;

  /// One repetition of one cell. Produces the same record the sweep writes.
  MetricsRecord run_cell(const CellKey& cell, std::size_t rep) const;

  /// Every cell x repetition. With `write_outputs`, reads any existing raw
  /// rows for resumption and writes raw, summary, failures, convergence and
  /// outliers CSVs to the output directory.
  SweepResult run_sweep(bool write_outputs = true) const;

  /// Called after each finished (data cell, rep) task with (done, total).
  void on_progress(std::function<void(std::size_t, std::size_t)> fn) { progress_ = std::move(fn); }

 private:
  struct Wanted {
    PairSpec pair;
    double epsilon;
  };
  std::vector<MetricsRecord> run_task(const DataCell& cell, std::size_t rep,
                                      const std::vector<Wanted>& wanted) const;
  DataCell data_cell_of(const CellKey& key) const;

  ExperimentConfig cfg_;
  std::shared_ptr<const Dataset> source_;  // CSV data when configured
  std::function<void(std::size_t, std::size_t)> progress_;
};

}  // namespace cplab
