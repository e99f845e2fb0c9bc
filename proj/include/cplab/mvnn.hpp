#pragma once

#include <utility>

#include <Eigen/Dense>

#include "cplab/models.hpp"
#include "cplab/rng.hpp"

namespace cplab {

/// Two independent one-hidden-layer sigmoid networks: a mean head and a
/// variance head whose output passes through softplus plus a small floor.
///
/// Parameters live in one flat vector, laid out per head as
/// [W1 (hidden x d, column-major), b1 (hidden), w2 (hidden), b2]; the mean
/// head comes first.
class MvnnNetwork {
 public:
  static constexpr double kVarianceFloor = 1e-6;

  MvnnNetwork() = default;
  MvnnNetwork(int input_dim, int hidden, Engine& eng);

  int input_dim() const noexcept { return d_; }
  int hidden() const noexcept { return h_; }
  Eigen::Index parameter_count() const noexcept { return theta_.size(); }
  Eigen::Index head_size() const noexcept { return static_cast<Eigen::Index>(h_) * (d_ + 2) + 1; }

  const Eigen::VectorXd& parameters() const noexcept { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta);

  /// (mean, variance) on the network's own scale.
  std::pair<double, double> forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  void forward_batch(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& var) const;

  /// Mean Gaussian negative log-likelihood over rows,
  ///   (1/n) sum [ 0.5 ln v(x_i) + (y_i - m(x_i))^2 / (2 v(x_i)) ].
  /// When `grad` is non-null it receives d(loss)/d(theta).
  double nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd* grad) const;

  /// Mean squared error of the mean head; gradient entries for the variance
  /// head are zero.
  double mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd* grad) const;

 private:
  struct HeadPass {
    Eigen::MatrixXd activation;  // n x hidden
    Eigen::VectorXd output;      // n
  };
  HeadPass head_forward(Eigen::Index offset, const Eigen::MatrixXd& x) const;
  void head_backward(Eigen::Index offset, const Eigen::MatrixXd& x, const HeadPass& pass,
                     const Eigen::VectorXd& d_output, Eigen::VectorXd& grad) const;

  int d_ = 0;
  int h_ = 0;
  Eigen::VectorXd theta_;
};

class MvnnModel {
 public:
  MvnnModel(Scaler scaler, MvnnNetwork net) : scaler_(std::move(scaler)), net_(std::move(net)) {}

  /// (mean, sigma) on the caller's target scale.
  std::pair<double, double> predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const MvnnNetwork& network() const noexcept { return net_; }
  const Scaler& scaler() const noexcept { return scaler_; }
  int input_dim() const noexcept { return net_.input_dim(); }

 private:
  Scaler scaler_;
  MvnnNetwork net_;
};

/// Adam on the Gaussian NLL. The first half of the epochs warms the mean head
/// up on squared error with the variance head frozen.
MvnnModel train_mvnn(const Dataset& train, const TrainConfig& cfg, TrainingInfo* info = nullptr);

}  // namespace cplab
