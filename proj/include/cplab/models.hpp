#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cplab/data.hpp"

namespace cplab {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingDivergence : public ModelError {
 public:
  TrainingDivergence(std::string what, int epoch)
      : ModelError(std::move(what) + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class FactorizationError : public ModelError {
 public:
  using ModelError::ModelError;
};

class DimensionMismatch : public ModelError {
 public:
  using ModelError::ModelError;
};

enum class ModelKind { MVNN, GP, GBQR };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.01;
  int mvnn_epochs = 2000;
  int mvnn_hidden = 50;
  int gp_steps = 500;
  double gp_jitter = 1e-8;
  std::size_t gp_max_rows = 5000;
  int gbqr_trees = 100;
  int gbqr_depth = 3;
  double gbqr_shrinkage = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingInfo {
  int iterations = 0;
  double final_loss = 0.0;
};

/// What a fitted model says about one input. MVNN and GP fill mean/sigma,
/// GBQR fills one value per quantile level (ascending level order).
struct Prediction {
  double mean = 0.0;
  double sigma = 0.0;
  std::vector<double> quantiles;

  bool operator==(const Prediction&) const = default;
};

/// Affine input/target scaling that a model applies internally.
struct Scaler {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;

  static Scaler fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  Eigen::MatrixXd transform_x(const Eigen::MatrixXd& x) const;
  Eigen::RowVectorXd transform_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd transform_y(const Eigen::VectorXd& y) const;
};

}  // namespace cplab
