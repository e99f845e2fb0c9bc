#pragma once

#include <utility>

#include <Eigen/Dense>

#include "cplab/models.hpp"

namespace cplab {

/// Constant-mean GP with an (ARD) squared-exponential kernel and Gaussian
/// noise. All values are on the model's internal (standardized) scale.
struct GpHyperparameters {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales = Eigen::VectorXd::Ones(1);
  double noise_variance = 0.1;
  double mean = 0.0;

  /// Unconstrained vector [log sf2, log l_1..l_L, log sn2, mean].
  Eigen::VectorXd pack() const;
  static GpHyperparameters unpack(const Eigen::VectorXd& theta);
};

struct LmlResult {
  double value = 0.0;          // log marginal likelihood
  Eigen::VectorXd gradient;    // w.r.t. the packed vector
  double jitter = 0.0;         // diagonal jitter that made the factorization succeed
};

/// Log marginal likelihood of (x, y) and its gradient in packed coordinates.
/// Jitter starts at `jitter` and escalates x10 up to 1e-4.
LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const GpHyperparameters& hp, double jitter, bool with_gradient);

class GpModel {
 public:
  /// Conditions on training data with fixed hyperparameters. `train` is on the
  /// caller's scale; `hp` applies after the internal scaling.
  static GpModel condition(const Dataset& train, GpHyperparameters hp, double jitter);
  /// Same, with an explicit scaler (identity scaling is Scaler{} with d zeros/ones).
  static GpModel condition(Scaler scaler, const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                           GpHyperparameters hp, double jitter);

  /// Predictive (mean, sd) of a new observation, on the caller's scale.
  std::pair<double, double> predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Posterior mean only; O(n) per row.
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& x_raw) const;

  const GpHyperparameters& hyperparameters() const noexcept { return hp_; }
  const Scaler& scaler() const noexcept { return scaler_; }
  int input_dim() const noexcept { return static_cast<int>(x_.cols()); }
  double jitter() const noexcept { return jitter_; }

 private:
  Scaler scaler_;
  GpHyperparameters hp_;
  Eigen::MatrixXd x_;  // scaled training inputs
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

struct GpFitTrace {
  double initial_lml = 0.0;
  double final_lml = 0.0;
};

/// Adam on the negative log marginal likelihood (per data point) in
/// log-hyperparameter space; returns the best iterate seen.
GpModel train_gp(const Dataset& train, const TrainConfig& cfg, TrainingInfo* info = nullptr,
                 GpFitTrace* trace = nullptr);

}  // namespace cplab
