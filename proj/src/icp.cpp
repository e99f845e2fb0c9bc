#include "cplab/icp.hpp"

#include <algorithm>
#include <cmath>

namespace cplab {

namespace {

// Products like 160 * 0.95 land a few ulps off the integer they represent;
// the slack keeps ceil() on the intended side.
constexpr double kIndexSlack = 1e-9;

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ModelError("miscoverage must lie in (0, 1)");
}

}  // namespace

bool calibration_feasible(std::size_t cal_size, double eps) {
  check_eps(eps);
  return static_cast<double>(cal_size) >= 1.0 / eps - 1.0 - kIndexSlack;
}

std::optional<std::size_t> conformal_index(std::size_t cal_size, double eps) {
  check_eps(eps);
  if (cal_size < 1 || !calibration_feasible(cal_size, eps)) return std::nullopt;
  const double raw = static_cast<double>(cal_size) * (1.0 - eps);
  auto n = static_cast<std::size_t>(std::ceil(raw - kIndexSlack * std::max(1.0, raw)));
  return std::clamp<std::size_t>(n, 1, cal_size);
}

std::optional<std::size_t> cqr_rank(std::size_t n, double eps) {
  check_eps(eps);
  if (n < 1) return std::nullopt;
  const double raw = (1.0 - eps) * (1.0 + 1.0 / static_cast<double>(n)) * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - kIndexSlack * std::max(1.0, raw)));
  if (k > n) return std::nullopt;
  return std::max<std::size_t>(k, 1);
}

std::optional<double> cqr_quantile(std::span<const double> scores, double eps) {
  if (scores.empty()) throw ModelError("cqr_quantile: empty score set");
  const auto k = cqr_rank(scores.size(), eps);
  if (!k) return std::nullopt;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(*k - 1), sorted.end());
  return sorted[*k - 1];
}

CalibratedPredictor CalibratedPredictor::from_scores(Ncm ncm, std::vector<double> scores,
                                                     double eps, NcmModels models) {
  ncm.validate();
  check_eps(eps);
  if (scores.empty()) throw ModelError("calibrate: empty calibration set");
  for (double s : scores)
    if (!std::isfinite(s)) throw ModelError("calibrate: non-finite calibration score");

  CalibratedPredictor cp;
  cp.ncm_ = ncm;
  cp.eps_ = eps;
  cp.models_ = std::move(models);
  std::stable_sort(scores.begin(), scores.end());
  cp.scores_ = std::move(scores);
  if (ncm.kind == NcmKind::Quantile) {
    if (auto k = cqr_rank(cp.scores_.size(), eps)) cp.threshold_ = cp.scores_[*k - 1];
  } else {
    if (auto n = conformal_index(cp.scores_.size(), eps)) cp.threshold_ = cp.scores_[*n - 1];
  }
  return cp;
}

Interval CalibratedPredictor::interval_for(const Forecast& f) const {
  if (!threshold_) return Interval::unbounded();
  return build_interval(ncm_, f, *threshold_);
}

Interval CalibratedPredictor::predict_interval(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (!threshold_) return Interval::unbounded();
  return interval_for(models_.forecast(x));
}

std::vector<Interval> CalibratedPredictor::predict_intervals(const Eigen::MatrixXd& x) const {
  if (!threshold_) return std::vector<Interval>(static_cast<std::size_t>(x.rows()));
  const auto fc = models_.forecast(x);
  std::vector<Interval> out;
  out.reserve(fc.size());
  for (const auto& f : fc) out.push_back(interval_for(f));
  return out;
}

std::vector<double> calibration_scores(const Ncm& ncm, std::span<const Forecast> forecasts,
                                       const Eigen::VectorXd& targets) {
  if (forecasts.size() != static_cast<std::size_t>(targets.size()))
    throw ModelError("calibration_scores: forecast/target length mismatch");
  std::vector<double> s(forecasts.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = score(ncm, targets(static_cast<Eigen::Index>(i)), forecasts[i]);
  return s;
}

CalibratedPredictor calibrate(const NcmModels& models, const Dataset& calibration, double eps) {
  const auto fc = models.forecast(calibration.features);
  return CalibratedPredictor::from_scores(models.ncm, calibration_scores(models.ncm, fc, calibration.targets),
                                          eps, models);
}

}  // namespace cplab
