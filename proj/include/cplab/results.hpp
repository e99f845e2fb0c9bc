#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "cplab/eval.hpp"

namespace cplab {

/// Coverage-gap curve of one (pair, data, eps) combination across sizes.
struct ConvergenceSeries {
  CellKey cell;  // n is unused
  std::vector<std::size_t> sizes;
  std::vector<MeanSe> gaps;  // mean and SE of |validity - (1 - eps)| per size
  std::vector<std::size_t> repetitions;
  std::optional<std::size_t> converged_at;
};

struct OutlierRow {
  CellKey cell;
  std::size_t feasible_repetitions = 0;
  std::vector<std::size_t> outlier_reps;
  OutlierReport report;
};

/// Sorted by (cell, rep); the order every output file uses.
void sort_records(std::vector<MetricsRecord>& records);

/// One summary per cell. Cells with a single repetition get NaN standard errors.
std::vector<CellSummary> summarize_all(std::span<const MetricsRecord> records);
std::vector<ConvergenceSeries> convergence_report(std::span<const MetricsRecord> records);
/// Cells with at least 4 feasible repetitions.
std::vector<OutlierRow> outlier_report(std::span<const MetricsRecord> records);

void write_raw_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_raw_csv(const std::filesystem::path& path);
void write_failures_csv(const std::filesystem::path& path, std::span<const MetricsRecord> failures);
std::vector<MetricsRecord> read_failures_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> summaries);
void write_convergence_csv(const std::filesystem::path& path, std::span<const ConvergenceSeries> series);
void write_outliers_csv(const std::filesystem::path& path, std::span<const OutlierRow> rows);

}  // namespace cplab
