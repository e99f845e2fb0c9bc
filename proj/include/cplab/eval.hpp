#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cplab/ncm.hpp"

namespace cplab {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Identifies one configuration cell; everything except the repetition.
struct CellKey {
  std::string ncm;      // "NCM", "normNCM", "qNCM"
  std::string model;    // "NN", "GP", "QR"
  std::string dataset;  // "synthetic" or the real dataset's name
  std::string noise;    // noise kind, "-" for real data
  int d = 1;
  std::size_t n = 0;
  double epsilon = 0.1;

  auto operator<=>(const CellKey&) const = default;
  bool operator==(const CellKey&) const = default;
  /// Stable text form, e.g. "NCM-NN/synthetic/homo_gauss/d1/n500/eps0.1".
  std::string id() const;
};

/// One (cell, repetition) result row.
struct MetricsRecord {
  CellKey cell;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double validity = 0.0;
  double efficiency = 0.0;  // +inf when infeasible
  bool infeasible = false;
  std::size_t zero_width_count = 0;
  double fit_seconds = 0.0;  // wall time; excluded from equality
  std::string error;         // non-empty when the repetition failed

  std::string run_id() const;
  /// Equality over every deterministic field (all but fit_seconds).
  bool same_result(const MetricsRecord& o) const;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample sd with n - 1, over sqrt(n)). Needs n >= 2.
MeanSe mean_se(std::span<const double> values);

struct OutlierReport {
  std::vector<std::size_t> outliers;  // positions in the input sequence
  double lower_quartile = 0.0;        // of log-efficiency
  double upper_quartile = 0.0;
  double fence = 0.0;                 // Q3 + 1.5 IQR, log scale
  MeanSe raw;
  MeanSe corrected;
};

struct CellSummary {
  CellKey cell;
  std::size_t repetitions = 0;
  std::size_t feasible_repetitions = 0;
  MeanSe validity;
  MeanSe efficiency;
  std::vector<std::size_t> outlier_reps;  // repetition indices
  MeanSe corrected_efficiency;
  std::size_t zero_width_total = 0;
};

/// Fraction of closed intervals containing their truth.
double validity(std::span<const Interval> intervals, std::span<const double> truths);
double validity(std::span<const Interval> intervals, const Eigen::VectorXd& truths);
/// Mean width; +inf if any interval is unbounded.
double efficiency(std::span<const Interval> intervals);
std::size_t zero_width_count(std::span<const Interval> intervals);

/// Linear-interpolation sample quantile (the default in numpy/R type 7).
double sample_quantile(std::vector<double> values, double p);

/// Upper-fence IQR screen on log efficiencies. Needs >= 4 values.
OutlierReport detect_outliers(std::span<const double> efficiencies);

/// Aggregates one cell's repetitions. Efficiency statistics use feasible
/// repetitions only. Needs >= 2 repetitions.
CellSummary summarize(std::span<const MetricsRecord> records);

/// Smallest size s_j (j >= 1) with |gap_j - gap_{j-1}| < 1e-3, where gap is the
/// mean absolute coverage gap at each ascending size.
std::optional<std::size_t> convergence_size(std::span<const double> gaps,
                                            std::span<const std::size_t> sizes,
                                            double tolerance = 1e-3);

}  // namespace cplab
