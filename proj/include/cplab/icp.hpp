#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cplab/ncm.hpp"

namespace cplab {

/// True when a calibration set of this size can support miscoverage eps,
/// i.e. cal_size >= 1/eps - 1.
bool calibration_feasible(std::size_t cal_size, double eps);

/// 1-based order-statistic index N = ceil(cal_size * (1 - eps)) into the
/// ascending calibration scores; nullopt when the configuration is infeasible.
std::optional<std::size_t> conformal_index(std::size_t cal_size, double eps);

/// 1-based rank ceil((1 - eps)(1 + 1/n) n) used by the quantile NCM; nullopt
/// when it exceeds n.
std::optional<std::size_t> cqr_rank(std::size_t n, double eps);

/// The (1 - eps)(1 + 1/n) empirical quantile of `scores`; nullopt when
/// infeasible. Throws on an empty score set.
std::optional<double> cqr_quantile(std::span<const double> scores, double eps);

/// Frozen calibration state. Immutable; predict_* are safe to call concurrently.
class CalibratedPredictor {
 public:
  /// Sorts `scores` and derives the threshold for `ncm.kind`.
  static CalibratedPredictor from_scores(Ncm ncm, std::vector<double> scores, double eps,
                                         NcmModels models = {});

  const Ncm& ncm() const noexcept { return ncm_; }
  double miscoverage() const noexcept { return eps_; }
  const std::vector<double>& sorted_scores() const noexcept { return scores_; }
  bool feasible() const noexcept { return threshold_.has_value(); }
  /// Threshold alpha*; nullopt when infeasible.
  std::optional<double> threshold() const noexcept { return threshold_; }
  const NcmModels& models() const noexcept { return models_; }

  /// Interval for an already-computed forecast; unbounded when infeasible.
  Interval interval_for(const Forecast& f) const;
  Interval predict_interval(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<Interval> predict_intervals(const Eigen::MatrixXd& x) const;

 private:
  Ncm ncm_;
  double eps_ = 0.1;
  std::vector<double> scores_;
  std::optional<double> threshold_;
  NcmModels models_;
};

/// Scores every calibration point with `models` and freezes the threshold.
/// Reads calibration targets only.
CalibratedPredictor calibrate(const NcmModels& models, const Dataset& calibration, double eps);

/// Calibration scores for precomputed forecasts.
std::vector<double> calibration_scores(const Ncm& ncm, std::span<const Forecast> forecasts,
                                       const Eigen::VectorXd& targets);

}  // namespace cplab
