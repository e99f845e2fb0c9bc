#include "cplab/gp.hpp"

#include <cmath>
#include <numbers>

#include "cplab/adam.hpp"
#include "cplab/kernels.hpp"

namespace cplab {

namespace {

constexpr double kMaxJitter = 1e-4;

/// Cholesky of k + (noise + jitter) I, escalating jitter by 10x on failure.
std::pair<Eigen::LLT<Eigen::MatrixXd>, double> factor(const Eigen::MatrixXd& k, double noise,
                                                       double jitter) {
  for (double j = jitter; j <= kMaxJitter * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise + j;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return {std::move(llt), j};
  }
  throw FactorizationError("gp: Cholesky failed with jitter up to 1e-4");
}

}  // namespace

Eigen::VectorXd GpHyperparameters::pack() const {
  const Eigen::Index l = lengthscales.size();
  Eigen::VectorXd theta(l + 3);
  theta(0) = std::log(signal_variance);
  theta.segment(1, l) = lengthscales.array().log();
  theta(l + 1) = std::log(noise_variance);
  theta(l + 2) = mean;
  return theta;
}

GpHyperparameters GpHyperparameters::unpack(const Eigen::VectorXd& theta) {
  const Eigen::Index l = theta.size() - 3;
  GpHyperparameters hp;
  hp.signal_variance = std::exp(theta(0));
  hp.lengthscales = theta.segment(1, l).array().exp();
  hp.noise_variance = std::exp(theta(l + 1));
  hp.mean = theta(l + 2);
  return hp;
}

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const GpHyperparameters& hp, double jitter, bool with_gradient) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd kf = kernels::rbf_gram(x, hp.signal_variance, hp.lengthscales);
  auto [llt, used] = factor(kf, hp.noise_variance, jitter);

  const Eigen::VectorXd r = y.array() - hp.mean;
  const Eigen::VectorXd alpha = llt.solve(r);
  const Eigen::MatrixXd& l = llt.matrixLLT();
  const double log_det_half = l.diagonal().array().log().sum();

  LmlResult out;
  out.jitter = used;
  out.value = -0.5 * r.dot(alpha) - log_det_half -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!with_gradient) return out;

  // dL/dtheta_j = 0.5 * tr(W dK/dtheta_j), W = alpha alpha^T - K^{-1}.
  Eigen::MatrixXd w = -llt.solve(Eigen::MatrixXd::Identity(n, n));
  w.noalias() += alpha * alpha.transpose();

  const Eigen::Index nl = hp.lengthscales.size();
  out.gradient.resize(nl + 3);
  const Eigen::MatrixXd wk = w.cwiseProduct(kf);
  out.gradient(0) = 0.5 * wk.sum();
  if (nl == 1) {
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      dist += kernels::scaled_sq_diff(x, c, hp.lengthscales(0));
    out.gradient(1) = 0.5 * wk.cwiseProduct(dist).sum();
  } else {
    for (Eigen::Index c = 0; c < nl; ++c)
      out.gradient(1 + c) =
          0.5 * wk.cwiseProduct(kernels::scaled_sq_diff(x, c, hp.lengthscales(c))).sum();
  }
  out.gradient(nl + 1) = 0.5 * hp.noise_variance * w.trace();
  out.gradient(nl + 2) = alpha.sum();
  return out;
}

GpModel GpModel::condition(const Dataset& train, GpHyperparameters hp, double jitter) {
  return condition(Scaler::fit(train.features, train.targets), train.features, train.targets,
                   std::move(hp), jitter);
}

GpModel GpModel::condition(Scaler scaler, const Eigen::MatrixXd& x_raw,
                           const Eigen::VectorXd& y_raw, GpHyperparameters hp, double jitter) {
  GpModel m;
  m.scaler_ = std::move(scaler);
  m.x_ = m.scaler_.transform_x(x_raw);
  const Eigen::VectorXd y = m.scaler_.transform_y(y_raw);
  m.hp_ = std::move(hp);
  const Eigen::MatrixXd kf = kernels::rbf_gram(m.x_, m.hp_.signal_variance, m.hp_.lengthscales);
  auto [llt, used] = factor(kf, m.hp_.noise_variance, jitter);
  m.chol_ = std::move(llt);
  m.jitter_ = used;
  m.alpha_ = m.chol_.solve((y.array() - m.hp_.mean).matrix());
  return m;
}

std::pair<double, double> GpModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != x_.cols())
    throw DimensionMismatch("gp: expected " + std::to_string(x_.cols()) + " features, got " +
                            std::to_string(x.size()));
  const Eigen::MatrixXd xs = scaler_.transform_row(x);
  const Eigen::VectorXd ks =
      kernels::rbf_cross(x_, xs, hp_.signal_variance, hp_.lengthscales, kernels::Exec::Serial).col(0);
  const double mean = hp_.mean + ks.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(ks);
  const double var = std::max(hp_.signal_variance - v.squaredNorm(), 0.0) + hp_.noise_variance;
  return {mean * scaler_.y_scale + scaler_.y_mean, std::sqrt(var) * scaler_.y_scale};
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::MatrixXd& x_raw) const {
  if (x_raw.cols() != x_.cols())
    throw DimensionMismatch("gp: expected " + std::to_string(x_.cols()) + " features, got " +
                            std::to_string(x_raw.cols()));
  const Eigen::MatrixXd xs = scaler_.transform_x(x_raw);
  Eigen::VectorXd out(xs.rows());
  // Blocked so the cross-kernel never exceeds ~block x n doubles.
  constexpr Eigen::Index kBlock = 1024;
  for (Eigen::Index start = 0; start < xs.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, xs.rows() - start);
    const Eigen::MatrixXd kq =
        kernels::rbf_cross(x_, xs.middleRows(start, len), hp_.signal_variance, hp_.lengthscales);
    out.segment(start, len) = (kq.transpose() * alpha_).array() + hp_.mean;
  }
  return out.array() * scaler_.y_scale + scaler_.y_mean;
}

GpModel train_gp(const Dataset& train, const TrainConfig& cfg, TrainingInfo* info,
                 GpFitTrace* trace) {
  cfg.validate();
  if (train.rows() < 2) throw ModelError("gp: need at least 2 training rows");
  if (train.rows() > cfg.gp_max_rows)
    throw ModelError("gp: " + std::to_string(train.rows()) +
                     " rows exceeds the dense-factorization limit of " +
                     std::to_string(cfg.gp_max_rows));

  Scaler scaler = Scaler::fit(train.features, train.targets);
  const Eigen::MatrixXd x = scaler.transform_x(train.features);
  const Eigen::VectorXd y = scaler.transform_y(train.targets);
  const auto n = static_cast<double>(train.rows());

  GpHyperparameters init;
  init.lengthscales = Eigen::VectorXd::Ones(train.dim() > 1 ? static_cast<Eigen::Index>(train.dim()) : 1);
  Eigen::VectorXd theta = init.pack();

  Adam adam(theta.size(), cfg.learning_rate);
  Eigen::VectorXd best = theta;
  double best_lml = -std::numeric_limits<double>::infinity();
  double initial_lml = 0.0;
  for (int step = 0; step <= cfg.gp_steps; ++step) {
    const bool last = step == cfg.gp_steps;
    const LmlResult r =
        log_marginal_likelihood(x, y, GpHyperparameters::unpack(theta), cfg.gp_jitter, !last);
    if (!std::isfinite(r.value)) throw TrainingDivergence("gp: non-finite marginal likelihood", step);
    if (step == 0) initial_lml = r.value;
    if (r.value > best_lml) {
      best_lml = r.value;
      best = theta;
    }
    if (last) break;
    adam.step(theta, -r.gradient / n);
  }

  if (info != nullptr) *info = TrainingInfo{cfg.gp_steps, -best_lml / n};
  if (trace != nullptr) *trace = GpFitTrace{initial_lml, best_lml};
  return GpModel::condition(std::move(scaler), train.features, train.targets,
                            GpHyperparameters::unpack(best), cfg.gp_jitter);
}

}  // namespace cplab
