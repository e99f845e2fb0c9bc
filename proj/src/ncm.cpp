#include "cplab/ncm.hpp"

#include <algorithm>
#include <cmath>

#include "cplab/kernels.hpp"

namespace cplab {

std::string_view to_string(NcmKind kind) noexcept {
  switch (kind) {
    case NcmKind::Absolute: return "NCM";
    case NcmKind::Normalized: return "normNCM";
    case NcmKind::Quantile: return "qNCM";
  }
  return "unknown";
}

NcmKind parse_ncm_kind(std::string_view text) {
  if (text == "NCM" || text == "absolute") return NcmKind::Absolute;
  if (text == "normNCM" || text == "normalized") return NcmKind::Normalized;
  if (text == "qNCM" || text == "quantile") return NcmKind::Quantile;
  throw ModelError("unknown NCM kind: " + std::string(text));
}

Ncm Ncm::quantile(double eps_low, double eps_high) {
  Ncm n{NcmKind::Quantile, eps_low, eps_high};
  n.validate();
  return n;
}

void Ncm::validate() const {
  if (kind == NcmKind::Quantile && !(0.0 < eps_low && eps_low < eps_high && eps_high < 1.0))
    throw ModelError("quantile NCM requires 0 < eps_low < eps_high < 1");
}

double score_absolute(double y, double y_hat) noexcept { return std::abs(y - y_hat); }

double score_normalized(double y, double y_hat, double sigma) {
  if (!(sigma > 0.0)) throw ModelError("normalized NCM: sigma must be > 0");
  return std::abs(y - y_hat) / std::max(sigma, kSigmaFloor);
}

double score_quantile(double y, double q_low, double q_high) noexcept {
  return std::max(q_low - y, y - q_high);
}

double score(const Ncm& ncm, double y, const Forecast& f) {
  switch (ncm.kind) {
    case NcmKind::Absolute: return score_absolute(y, f.point);
    case NcmKind::Normalized: return score_normalized(y, f.point, f.scale);
    case NcmKind::Quantile: return score_quantile(y, f.q_low, f.q_high);
  }
  return 0.0;
}

Interval build_interval(const Ncm& ncm, const Forecast& f, double threshold) {
  switch (ncm.kind) {
    case NcmKind::Absolute: return Interval::bounded(f.point - threshold, f.point + threshold);
    case NcmKind::Normalized: {
      const double s = std::max(f.scale, kSigmaFloor);
      return Interval::bounded(f.point - threshold * s, f.point + threshold * s);
    }
    case NcmKind::Quantile: return Interval::bounded(f.q_low - threshold, f.q_high + threshold);
  }
  return Interval::unbounded();
}

TrainedModel fit_sigma_model(const Dataset& proper_train, const TrainedModel& primary,
                             const TrainConfig& cfg) {
  const Eigen::VectorXd fitted = primary.predict_point(proper_train.features);
  Dataset log_resid = proper_train;
  log_resid.targets = (proper_train.targets - fitted).cwiseAbs().cwiseMax(kResidualFloor).array().log();
  log_resid.standardization.reset();
  TrainConfig sigma_cfg = cfg;
  sigma_cfg.seed = derive_seed(cfg.seed, "sigma-model");
  return fit_point_model(primary.kind(), log_resid, sigma_cfg);
}

Eigen::VectorXd predict_sigma(const TrainedModel& sigma_model, const Eigen::MatrixXd& x) {
  return sigma_model.predict_point(x).array().exp().cwiseMax(kSigmaFloor);
}

Forecast NcmModels::forecast(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::MatrixXd row = x;
  return forecast(row).front();
}

std::vector<Forecast> NcmModels::forecast(const Eigen::MatrixXd& x) const {
  if (!point) throw ModelError("NCM models are not fitted");
  std::vector<Forecast> out(static_cast<std::size_t>(x.rows()));
  if (ncm.kind == NcmKind::Quantile) {
    const auto* qr = std::get_if<GbqrModel>(&point->impl());
    if (qr == nullptr) throw ModelError("quantile NCM needs a quantile regressor");
    kernels::for_each_index(x.rows(), [&](Eigen::Index i) {
      const auto q = qr->predict(x.row(i));
      auto& f = out[static_cast<std::size_t>(i)];
      f.q_low = q.front();
      f.q_high = q.back();
    });
    return out;
  }
  const Eigen::VectorXd mean = point->predict_point(x);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(x.rows());
  if (ncm.kind == NcmKind::Normalized) {
    if (!sigma) throw ModelError("normalized NCM needs a sigma model");
    scale = predict_sigma(*sigma, x);
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto& f = out[static_cast<std::size_t>(i)];
    f.point = mean(i);
    f.scale = scale(i);
  }
  return out;
}

NcmModels fit_ncm_models(const Ncm& ncm, ModelKind model, const Dataset& proper_train,
                         const TrainConfig& cfg) {
  ncm.validate();
  NcmModels m;
  m.ncm = ncm;
  if (ncm.kind == NcmKind::Quantile) {
    const double levels[] = {ncm.eps_low, ncm.eps_high};
    m.point = std::make_shared<const TrainedModel>(fit_gbqr(proper_train, cfg, levels));
    return m;
  }
  m.point = std::make_shared<const TrainedModel>(fit_point_model(model, proper_train, cfg));
  if (ncm.kind == NcmKind::Normalized)
    m.sigma = std::make_shared<const TrainedModel>(fit_sigma_model(proper_train, *m.point, cfg));
  return m;
}

}  // namespace cplab
