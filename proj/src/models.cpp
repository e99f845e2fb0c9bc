#include "cplab/trained_model.hpp"

#include <cmath>

#include "cplab/kernels.hpp"

namespace cplab {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::MVNN: return "NN";
    case ModelKind::GP: return "GP";
    case ModelKind::GBQR: return "QR";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "NN" || text == "MVNN" || text == "nn" || text == "mvnn") return ModelKind::MVNN;
  if (text == "GP" || text == "gp") return ModelKind::GP;
  if (text == "QR" || text == "GBQR" || text == "qr" || text == "gbqr") return ModelKind::GBQR;
  throw ModelError("unknown model kind: " + std::string(text));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ModelError("train config: learning_rate must be > 0");
  if (mvnn_epochs < 1 || mvnn_hidden < 1) throw ModelError("train config: mvnn sizes must be > 0");
  if (gp_steps < 1) throw ModelError("train config: gp_steps must be > 0");
  if (!(gp_jitter >= 1e-10)) throw ModelError("train config: gp_jitter must be >= 1e-10");
  if (gbqr_trees < 1 || gbqr_depth < 1) throw ModelError("train config: gbqr sizes must be > 0");
  if (!(gbqr_shrinkage > 0.0)) throw ModelError("train config: gbqr_shrinkage must be > 0");
}

Scaler Scaler::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Scaler s;
  const auto n = static_cast<double>(x.rows());
  s.x_mean = x.colwise().mean();
  s.x_scale = ((x.rowwise() - s.x_mean).array().square().colwise().sum() / n).sqrt();
  // Constant columns keep unit scale so they map to zero.
  for (Eigen::Index j = 0; j < s.x_scale.size(); ++j)
    if (!(s.x_scale(j) > 1e-12)) s.x_scale(j) = 1.0;
  s.y_mean = y.mean();
  s.y_scale = std::sqrt((y.array() - s.y_mean).square().sum() / n);
  if (!(s.y_scale > 1e-12)) s.y_scale = 1.0;
  return s;
}

Eigen::MatrixXd Scaler::transform_x(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - x_mean).array().rowwise() / x_scale.array();
}

Eigen::RowVectorXd Scaler::transform_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return (x - x_mean).array() / x_scale.array();
}

Eigen::VectorXd Scaler::transform_y(const Eigen::VectorXd& y) const {
  return (y.array() - y_mean) / y_scale;
}

ModelKind TrainedModel::kind() const noexcept {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MvnnModel>) return ModelKind::MVNN;
        else if constexpr (std::is_same_v<T, GpModel>) return ModelKind::GP;
        else return ModelKind::GBQR;
      },
      impl_);
}

int TrainedModel::input_dim() const noexcept {
  return std::visit([](const auto& m) { return m.input_dim(); }, impl_);
}

Prediction TrainedModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        Prediction p;
        if constexpr (std::is_same_v<T, GbqrModel>) {
          p.quantiles = m.predict(x);
        } else {
          auto [mean, sigma] = m.predict(x);
          p.mean = mean;
          p.sigma = sigma;
        }
        return p;
      },
      impl_);
}

Prediction TrainedModel::predict(std::span<const double> x) const {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = x[static_cast<std::size_t>(j)];
  return predict(row);
}

Eigen::VectorXd TrainedModel::predict_point(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim())
    throw DimensionMismatch("predict: expected " + std::to_string(input_dim()) + " features, got " +
                            std::to_string(x.cols()));
  if (const auto* gp = std::get_if<GpModel>(&impl_)) return gp->predict_mean(x);
  if (const auto* nn = std::get_if<MvnnModel>(&impl_)) {
    Eigen::VectorXd mean, var;
    nn->network().forward_batch(nn->scaler().transform_x(x), mean, var);
    return mean.array() * nn->scaler().y_scale + nn->scaler().y_mean;
  }
  const auto& qr = std::get<GbqrModel>(impl_);
  Eigen::VectorXd out(x.rows());
  kernels::for_each_index(x.rows(), [&](Eigen::Index i) {
    const auto q = qr.predict(x.row(i));
    out(i) = q[q.size() / 2];
  });
  return out;
}

std::vector<Prediction> TrainedModel::predict_batch(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim())
    throw DimensionMismatch("predict: expected " + std::to_string(input_dim()) + " features, got " +
                            std::to_string(x.cols()));
  std::vector<Prediction> out(static_cast<std::size_t>(x.rows()));
  kernels::for_each_index(x.rows(),
                          [&](Eigen::Index i) { out[static_cast<std::size_t>(i)] = predict(x.row(i)); });
  return out;
}

TrainedModel fit_mvnn(const Dataset& train, const TrainConfig& cfg) {
  TrainingInfo info;
  auto m = train_mvnn(train, cfg, &info);
  return TrainedModel(std::move(m), info);
}

TrainedModel fit_gp(const Dataset& train, const TrainConfig& cfg) {
  TrainingInfo info;
  auto m = train_gp(train, cfg, &info);
  return TrainedModel(std::move(m), info);
}

TrainedModel fit_gbqr(const Dataset& train, const TrainConfig& cfg, std::span<const double> levels) {
  TrainingInfo info;
  auto m = train_gbqr(train, cfg, levels, &info);
  return TrainedModel(std::move(m), info);
}

TrainedModel fit_point_model(ModelKind kind, const Dataset& train, const TrainConfig& cfg) {
  switch (kind) {
    case ModelKind::MVNN: return fit_mvnn(train, cfg);
    case ModelKind::GP: return fit_gp(train, cfg);
    case ModelKind::GBQR: break;
  }
  throw ModelError("fit_point_model: quantile regressor has no point prediction");
}

}  // namespace cplab
