#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cplab/models.hpp"

namespace cplab {

/// Pinball (check) loss: u * (tau - 1{u < 0}) with u = y - prediction.
double pinball_loss(double residual, double tau) noexcept;

/// Order statistic used for leaf values and the initial prediction: the
/// ceil(tau * n)-th smallest value (1-based, at least the 1st).
double lower_quantile(std::vector<double> values, double tau);

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  /// Least-squares tree on `target` over the rows in `rows`; splits go left
  /// when x[feature] <= threshold.
  static RegressionTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                            std::vector<std::size_t> rows, int max_depth);

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  std::vector<Node>& nodes() noexcept { return nodes_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 private:
  int grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, std::vector<std::size_t>& rows,
           std::size_t begin, std::size_t end, int depth, int max_depth);

  std::vector<Node> nodes_;
};

/// Gradient-boosted trees for one quantile level: trees fit the negative
/// pinball gradient, then each leaf is reset to the level's quantile of the
/// current residuals in that leaf.
class QuantileBooster {
 public:
  static QuantileBooster fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double level,
                             const TrainConfig& cfg);
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double level() const noexcept { return level_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }

 private:
  double level_ = 0.5;
  double init_ = 0.0;
  double shrinkage_ = 0.1;
  std::vector<RegressionTree> trees_;
};

class GbqrModel {
 public:
  GbqrModel(std::vector<double> levels, std::vector<QuantileBooster> boosters, int dim)
      : levels_(std::move(levels)), boosters_(std::move(boosters)), dim_(dim) {}

  /// One value per level, ascending; crossing is repaired by sorting.
  std::vector<double> predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Raw per-level values before the crossing repair.
  std::vector<double> predict_unrepaired(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const std::vector<double>& levels() const noexcept { return levels_; }
  int input_dim() const noexcept { return dim_; }

 private:
  std::vector<double> levels_;
  std::vector<QuantileBooster> boosters_;
  int dim_;
};

GbqrModel train_gbqr(const Dataset& train, const TrainConfig& cfg, std::span<const double> levels,
                     TrainingInfo* info = nullptr);

}  // namespace cplab
