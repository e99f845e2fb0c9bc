#pragma once

#include <span>
#include <variant>
#include <vector>

#include "cplab/gbqr.hpp"
#include "cplab/gp.hpp"
#include "cplab/models.hpp"
#include "cplab/mvnn.hpp"

namespace cplab {

/// A fitted regressor of one of the three kinds. Immutable after fitting and
/// safe to share between threads.
class TrainedModel {
 public:
  using Impl = std::variant<MvnnModel, GpModel, GbqrModel>;

  TrainedModel(Impl impl, TrainingInfo info) : impl_(std::move(impl)), info_(info) {}

  ModelKind kind() const noexcept;
  int input_dim() const noexcept;
  const TrainingInfo& info() const noexcept { return info_; }
  const Impl& impl() const noexcept { return impl_; }

  Prediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Prediction predict(std::span<const double> x) const;

  /// Point predictions for every row: the mean for MVNN/GP, the middle
  /// level for GBQR.
  Eigen::VectorXd predict_point(const Eigen::MatrixXd& x) const;
  std::vector<Prediction> predict_batch(const Eigen::MatrixXd& x) const;

 private:
  Impl impl_;
  TrainingInfo info_;
};

TrainedModel fit_mvnn(const Dataset& train, const TrainConfig& cfg);
TrainedModel fit_gp(const Dataset& train, const TrainConfig& cfg);
TrainedModel fit_gbqr(const Dataset& train, const TrainConfig& cfg, std::span<const double> levels);

/// Fits a mean regressor (MVNN or GP) of the given kind.
TrainedModel fit_point_model(ModelKind kind, const Dataset& train, const TrainConfig& cfg);

}  // namespace cplab
