#pragma once

#include <limits>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cplab/trained_model.hpp"

namespace cplab {

enum class NcmKind { Absolute, Normalized, Quantile };

std::string_view to_string(NcmKind kind) noexcept;  // "NCM", "normNCM", "qNCM"
NcmKind parse_ncm_kind(std::string_view text);

inline constexpr double kSigmaFloor = 1e-6;     // applied to sigma before dividing
inline constexpr double kResidualFloor = 1e-8;  // applied to |residual| before the log

struct Ncm {
  NcmKind kind = NcmKind::Absolute;
  double eps_low = 0.0;   // quantile levels, Quantile kind only
  double eps_high = 0.0;

  static Ncm absolute() { return {NcmKind::Absolute, 0.0, 0.0}; }
  static Ncm normalized() { return {NcmKind::Normalized, 0.0, 0.0}; }
  static Ncm quantile(double eps_low, double eps_high);
  /// Symmetric levels (eps/2, 1 - eps/2) for a target miscoverage eps.
  static Ncm quantile_for(double miscoverage) {
    return quantile(miscoverage / 2.0, 1.0 - miscoverage / 2.0);
  }
  void validate() const;
};

/// Per-point model output an NCM consumes: `point` for Absolute, `point` and
/// `scale` for Normalized, the (repaired) quantile band for Quantile.
struct Forecast {
  double point = 0.0;
  double scale = 1.0;
  double q_low = 0.0;
  double q_high = 0.0;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool infinite = true;

  static Interval unbounded() { return {}; }
  static Interval bounded(double lo, double hi) { return {lo, hi, false}; }

  /// Crossed endpoints count as an empty interval of width zero.
  double width() const noexcept {
    if (infinite) return std::numeric_limits<double>::infinity();
    return hi > lo ? hi - lo : 0.0;
  }
  /// Closed membership, lo <= y <= hi.
  bool contains(double y) const noexcept { return infinite || (lo <= y && y <= hi); }
  bool degenerate() const noexcept { return !infinite && !(hi > lo); }
};

double score_absolute(double y, double y_hat) noexcept;
/// |y - y_hat| / max(sigma, kSigmaFloor); throws for sigma <= 0.
double score_normalized(double y, double y_hat, double sigma);
/// max(q_low - y, y - q_high); negative inside the band.
double score_quantile(double y, double q_low, double q_high) noexcept;

double score(const Ncm& ncm, double y, const Forecast& f);
Interval build_interval(const Ncm& ncm, const Forecast& f, double threshold);

/// Second regressor of the primary's kind fitted to (x_i, ln max(|y_i - y_hat_i|, floor))
/// on the proper training set.
TrainedModel fit_sigma_model(const Dataset& proper_train, const TrainedModel& primary,
                             const TrainConfig& cfg);

/// sigma(x) = max(exp(prediction), kSigmaFloor) for every row.
Eigen::VectorXd predict_sigma(const TrainedModel& sigma_model, const Eigen::MatrixXd& x);

/// The fitted model(s) behind one NCM.
struct NcmModels {
  Ncm ncm;
  std::shared_ptr<const TrainedModel> point;  // MVNN/GP mean model, or the GBQR band
  std::shared_ptr<const TrainedModel> sigma;  // Normalized only

  Forecast forecast(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<Forecast> forecast(const Eigen::MatrixXd& x) const;
};

/// Fits what `ncm` needs on the proper training set. For the Quantile kind the
/// model kind is ignored and a GBQR is fit at (eps_low, eps_high).
NcmModels fit_ncm_models(const Ncm& ncm, ModelKind model, const Dataset& proper_train,
                         const TrainConfig& cfg);

}  // namespace cplab
