#include "cplab/gbqr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cplab {

double pinball_loss(double residual, double tau) noexcept {
  return residual * (tau - (residual < 0.0 ? 1.0 : 0.0));
}

double lower_quantile(std::vector<double> values, double tau) {
  if (values.empty()) throw ModelError("quantile of an empty set");
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n) - 1e-12));
  k = std::clamp<std::size_t>(k, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                                   std::vector<std::size_t> rows, int max_depth) {
  RegressionTree tree;
  tree.grow(x, target, rows, 0, rows.size(), 0, max_depth);
  return tree;
}

int RegressionTree::grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                         std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                         int depth, int max_depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  const auto count = static_cast<double>(end - begin);
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) total += target(static_cast<Eigen::Index>(rows[i]));
  nodes_[static_cast<std::size_t>(id)].value = count > 0 ? total / count : 0.0;
  if (depth >= max_depth || end - begin < 2) return id;

  const double parent_score = total * total / count;
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;

  std::vector<std::size_t> order(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                 rows.begin() + static_cast<std::ptrdiff_t>(end));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      left_sum += target(static_cast<Eigen::Index>(order[i]));
      const double xv = x(static_cast<Eigen::Index>(order[i]), f);
      const double xn = x(static_cast<Eigen::Index>(order[i + 1]), f);
      if (!(xn > xv)) continue;
      const auto nl = static_cast<double>(i + 1);
      const double nr = count - nl;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = 0.5 * (xv + xn);
        if (!(best_threshold > xv && best_threshold <= xn)) best_threshold = xv;
      }
    }
  }
  if (best_feature < 0) return id;

  auto mid = std::stable_partition(
      rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold; });
  const auto split = static_cast<std::size_t>(mid - rows.begin());

  const int left = grow(x, target, rows, begin, split, depth + 1, max_depth);
  const int right = grow(x, target, rows, split, end, depth + 1, max_depth);
  auto& node = nodes_[static_cast<std::size_t>(id)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = left;
  node.right = right;
  return id;
}

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return id;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return nodes_[static_cast<std::size_t>(leaf_of(x))].value;
}

QuantileBooster QuantileBooster::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double level, const TrainConfig& cfg) {
  QuantileBooster b;
  b.level_ = level;
  b.shrinkage_ = cfg.gbqr_shrinkage;
  const auto n = static_cast<std::size_t>(y.size());
  b.init_ = lower_quantile(std::vector<double>(y.data(), y.data() + y.size()), level);

  Eigen::VectorXd current = Eigen::VectorXd::Constant(y.size(), b.init_);
  Eigen::VectorXd pseudo(y.size());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<int> leaf(n);

  b.trees_.reserve(static_cast<std::size_t>(cfg.gbqr_trees));
  for (int t = 0; t < cfg.gbqr_trees; ++t) {
    for (Eigen::Index i = 0; i < y.size(); ++i) pseudo(i) = y(i) > current(i) ? level : level - 1.0;
    RegressionTree tree = RegressionTree::fit(x, pseudo, all, cfg.gbqr_depth);

    auto& nodes = tree.nodes();
    std::vector<std::vector<double>> residuals(nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      leaf[i] = tree.leaf_of(x.row(r));
      residuals[static_cast<std::size_t>(leaf[i])].push_back(y(r) - current(r));
    }
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k].feature < 0 && !residuals[k].empty())
        nodes[k].value = lower_quantile(std::move(residuals[k]), level);

    for (std::size_t i = 0; i < n; ++i)
      current(static_cast<Eigen::Index>(i)) +=
          b.shrinkage_ * nodes[static_cast<std::size_t>(leaf[i])].value;
    b.trees_.push_back(std::move(tree));
  }
  return b;
}

double QuantileBooster::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double f = init_;
  for (const auto& tree : trees_) f += shrinkage_ * tree.predict(x);
  return f;
}

std::vector<double> GbqrModel::predict_unrepaired(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != dim_)
    throw DimensionMismatch("gbqr: expected " + std::to_string(dim_) + " features, got " +
                            std::to_string(x.size()));
  std::vector<double> out;
  out.reserve(boosters_.size());
  for (const auto& b : boosters_) out.push_back(b.predict(x));
  return out;
}

std::vector<double> GbqrModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  auto out = predict_unrepaired(x);
  std::sort(out.begin(), out.end());
  return out;
}

GbqrModel train_gbqr(const Dataset& train, const TrainConfig& cfg, std::span<const double> levels,
                     TrainingInfo* info) {
  cfg.validate();
  if (levels.empty()) throw ModelError("gbqr: empty quantile level list");
  if (train.rows() < 10) throw ModelError("gbqr: need at least 10 training rows");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0))
      throw ModelError("gbqr: quantile levels must lie strictly inside (0, 1)");
    if (i > 0 && !(levels[i] > levels[i - 1]))
      throw ModelError("gbqr: quantile levels must be strictly increasing");
  }

  std::vector<QuantileBooster> boosters;
  double loss = 0.0;
  for (double level : levels) {
    boosters.push_back(QuantileBooster::fit(train.features, train.targets, level, cfg));
    for (Eigen::Index i = 0; i < train.targets.size(); ++i)
      loss += pinball_loss(train.targets(i) - boosters.back().predict(train.features.row(i)), level);
  }
  if (info != nullptr)
    *info = TrainingInfo{cfg.gbqr_trees,
                         loss / static_cast<double>(train.rows() * levels.size())};
  return GbqrModel(std::vector<double>(levels.begin(), levels.end()), std::move(boosters),
                   static_cast<int>(train.dim()));
}

}  // namespace cplab
