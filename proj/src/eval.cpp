#include "cplab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "cplab/rng.hpp"

namespace cplab {

std::string CellKey::id() const {
  return fmt::format("{}-{}/{}/{}/d{}/n{}/eps{}", ncm, model, dataset, noise, d, n, epsilon);
}

std::string MetricsRecord::run_id() const {
  return fmt::format("{:016x}", fnv1a(fmt::format("{}/rep{}", cell.id(), rep)));
}

bool MetricsRecord::same_result(const MetricsRecord& o) const {
  auto same = [](double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
  };
  return cell == o.cell && rep == o.rep && seed == o.seed && same(validity, o.validity) &&
         same(efficiency, o.efficiency) && infeasible == o.infeasible &&
         zero_width_count == o.zero_width_count && error == o.error;
}

MeanSe mean_se(std::span<const double> values) {
  if (values.size() < 2) throw EvalError("standard error needs at least 2 values");
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

double validity(std::span<const Interval> intervals, std::span<const double> truths) {
  if (intervals.size() != truths.size()) throw EvalError("validity: length mismatch");
  if (intervals.empty()) throw EvalError("validity: empty test set");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) covered += intervals[i].contains(truths[i]);
  return static_cast<double>(covered) / static_cast<double>(intervals.size());
}

double validity(std::span<const Interval> intervals, const Eigen::VectorXd& truths) {
  return validity(intervals, std::span<const double>(truths.data(), static_cast<std::size_t>(truths.size())));
}

double efficiency(std::span<const Interval> intervals) {
  if (intervals.empty()) throw EvalError("efficiency: empty test set");
  double total = 0.0;
  for (const auto& iv : intervals) {
    if (iv.infinite) return std::numeric_limits<double>::infinity();
    total += iv.width();
  }
  return total / static_cast<double>(intervals.size());
}

std::size_t zero_width_count(std::span<const Interval> intervals) {
  return static_cast<std::size_t>(
      std::count_if(intervals.begin(), intervals.end(), [](const Interval& iv) { return iv.degenerate(); }));
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EvalError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

OutlierReport detect_outliers(std::span<const double> efficiencies) {
  if (efficiencies.size() < 4) throw EvalError("outlier detection needs at least 4 repetitions");
  std::vector<double> logs;
  logs.reserve(efficiencies.size());
  for (double e : efficiencies) {
    if (!(e > 0.0) || !std::isfinite(e)) throw EvalError("outlier detection needs finite positive efficiencies");
    logs.push_back(std::log(e));
  }

  OutlierReport r;
  r.lower_quartile = sample_quantile(logs, 0.25);
  r.upper_quartile = sample_quantile(logs, 0.75);
  r.fence = r.upper_quartile + 1.5 * (r.upper_quartile - r.lower_quartile);
  std::vector<double> kept;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i] > r.fence) r.outliers.push_back(i);
    else kept.push_back(efficiencies[i]);
  }
  if (kept.empty()) throw EvalError("outlier detection flagged every repetition");
  r.raw = mean_se(efficiencies);
  if (kept.size() >= 2) {
    r.corrected = mean_se(kept);
  } else {
    r.corrected = {kept.front(), std::numeric_limits<double>::quiet_NaN()};
  }
  return r;
}

CellSummary summarize(std::span<const MetricsRecord> records) {
  if (records.size() < 2) throw EvalError("summarize needs at least 2 repetitions");
  std::vector<const MetricsRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->rep < b->rep; });

  CellSummary s;
  s.cell = sorted.front()->cell;
  s.repetitions = sorted.size();
  std::vector<double> vals, effs;
  std::vector<std::size_t> eff_reps;
  for (const auto* r : sorted) {
    if (!(r->cell == s.cell)) throw EvalError("summarize: records from different cells");
    vals.push_back(r->validity);
    s.zero_width_total += r->zero_width_count;
    if (!r->infeasible && std::isfinite(r->efficiency)) {
      effs.push_back(r->efficiency);
      eff_reps.push_back(r->rep);
    }
  }
  s.validity = mean_se(vals);
  s.feasible_repetitions = effs.size();

  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (effs.empty()) {
    s.efficiency = {inf, nan};
  } else if (effs.size() == 1) {
    s.efficiency = {effs.front(), nan};
  } else {
    s.efficiency = mean_se(effs);
  }
  s.corrected_efficiency = s.efficiency;
  const bool positive = std::all_of(effs.begin(), effs.end(), [](double e) { return e > 0.0; });
  if (effs.size() >= 4 && positive) {
    const auto rep = detect_outliers(effs);
    for (auto i : rep.outliers) s.outlier_reps.push_back(eff_reps[i]);
    s.corrected_efficiency = rep.corrected;
  }
  return s;
}

std::optional<std::size_t> convergence_size(std::span<const double> gaps,
                                            std::span<const std::size_t> sizes, double tolerance) {
  if (gaps.size() != sizes.size()) throw EvalError("convergence: gaps and sizes differ in length");
  for (std::size_t j = 1; j < gaps.size(); ++j)
    if (std::abs(gaps[j] - gaps[j - 1]) < tolerance) return sizes[j];
  return std::nullopt;
}

}  // namespace cplab
