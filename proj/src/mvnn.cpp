#include "cplab/mvnn.hpp"

#include <cmath>
#include <random>

#include "cplab/adam.hpp"

namespace cplab {

namespace {

double softplus(double z) noexcept { return z > 30.0 ? z : std::log1p(std::exp(z)); }
double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

MvnnNetwork::MvnnNetwork(int input_dim, int hidden, Engine& eng) : d_(input_dim), h_(hidden) {
  theta_.resize(2 * head_size());
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every layer, as torch.nn.Linear does.
  std::uniform_real_distribution<double> in_layer(-1.0 / std::sqrt(d_), 1.0 / std::sqrt(d_));
  std::uniform_real_distribution<double> out_layer(-1.0 / std::sqrt(h_), 1.0 / std::sqrt(h_));
  for (int head = 0; head < 2; ++head) {
    const Eigen::Index off = head * head_size();
    const Eigen::Index n_in = static_cast<Eigen::Index>(h_) * (d_ + 1);
    for (Eigen::Index i = 0; i < n_in; ++i) theta_(off + i) = in_layer(eng);
    for (Eigen::Index i = n_in; i < head_size(); ++i) theta_(off + i) = out_layer(eng);
  }
}

void MvnnNetwork::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) throw ModelError("mvnn: parameter vector has wrong size");
  theta_ = theta;
}

MvnnNetwork::HeadPass MvnnNetwork::head_forward(Eigen::Index offset,
                                                const Eigen::MatrixXd& x) const {
  const Eigen::Index h = h_, d = d_;
  Eigen::Map<const Eigen::MatrixXd> w1(theta_.data() + offset, h, d);
  Eigen::Map<const Eigen::VectorXd> b1(theta_.data() + offset + h * d, h);
  Eigen::Map<const Eigen::VectorXd> w2(theta_.data() + offset + h * d + h, h);
  const double b2 = theta_(offset + h * d + 2 * h);

  HeadPass pass;
  pass.activation = (x * w1.transpose()).rowwise() + b1.transpose();
  pass.activation = pass.activation.unaryExpr([](double z) { return logistic(z); });
  pass.output = (pass.activation * w2).array() + b2;
  return pass;
}

void MvnnNetwork::head_backward(Eigen::Index offset, const Eigen::MatrixXd& x,
                                const HeadPass& pass, const Eigen::VectorXd& d_output,
                                Eigen::VectorXd& grad) const {
  const Eigen::Index h = h_, d = d_;
  Eigen::Map<const Eigen::VectorXd> w2(theta_.data() + offset + h * d + h, h);
  Eigen::Map<Eigen::MatrixXd> g_w1(grad.data() + offset, h, d);
  Eigen::Map<Eigen::VectorXd> g_b1(grad.data() + offset + h * d, h);
  Eigen::Map<Eigen::VectorXd> g_w2(grad.data() + offset + h * d + h, h);

  g_w2 = pass.activation.transpose() * d_output;
  grad(offset + h * d + 2 * h) = d_output.sum();
  Eigen::MatrixXd d_pre = (d_output * w2.transpose()).array() * pass.activation.array() *
                          (1.0 - pass.activation.array());
  g_w1 = d_pre.transpose() * x;
  g_b1 = d_pre.colwise().sum().transpose();
}

std::pair<double, double> MvnnNetwork::forward(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::MatrixXd row = x;
  Eigen::VectorXd mean, var;
  forward_batch(row, mean, var);
  return {mean(0), var(0)};
}

void MvnnNetwork::forward_batch(const Eigen::MatrixXd& x, Eigen::VectorXd& mean,
                                Eigen::VectorXd& var) const {
  mean = head_forward(0, x).output;
  var = head_forward(head_size(), x).output.unaryExpr(
      [](double z) { return softplus(z) + kVarianceFloor; });
}

double MvnnNetwork::nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        Eigen::VectorXd* grad) const {
  const auto n = static_cast<double>(y.size());
  const HeadPass mp = head_forward(0, x);
  const HeadPass vp = head_forward(head_size(), x);
  const Eigen::ArrayXd var = vp.output.unaryExpr([](double z) { return softplus(z) + kVarianceFloor; });
  const Eigen::ArrayXd resid = y.array() - mp.output.array();
  const double loss = (0.5 * var.log() + resid.square() / (2.0 * var)).sum() / n;

  if (grad != nullptr) {
    grad->setZero(theta_.size());
    const Eigen::VectorXd d_mean = (-resid / var / n).matrix();
    const Eigen::ArrayXd d_var = (0.5 / var - resid.square() / (2.0 * var.square())) / n;
    const Eigen::VectorXd d_z =
        (d_var * vp.output.array().unaryExpr([](double z) { return logistic(z); })).matrix();
    head_backward(0, x, mp, d_mean, *grad);
    head_backward(head_size(), x, vp, d_z, *grad);
  }
  return loss;
}

double MvnnNetwork::mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        Eigen::VectorXd* grad) const {
  const auto n = static_cast<double>(y.size());
  const HeadPass mp = head_forward(0, x);
  const Eigen::VectorXd resid = y - mp.output;
  const double loss = resid.squaredNorm() / n;
  if (grad != nullptr) {
    grad->setZero(theta_.size());
    head_backward(0, x, mp, (-2.0 / n) * resid, *grad);
  }
  return loss;
}

std::pair<double, double> MvnnModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != net_.input_dim())
    throw DimensionMismatch("mvnn: expected " + std::to_string(net_.input_dim()) +
                            " features, got " + std::to_string(x.size()));
  auto [m, v] = net_.forward(scaler_.transform_row(x));
  return {m * scaler_.y_scale + scaler_.y_mean, std::sqrt(v) * scaler_.y_scale};
}

MvnnModel train_mvnn(const Dataset& train, const TrainConfig& cfg, TrainingInfo* info) {
  cfg.validate();
  if (train.rows() < 2) throw ModelError("mvnn: need at least 2 training rows");

  Scaler scaler = Scaler::fit(train.features, train.targets);
  const Eigen::MatrixXd x = scaler.transform_x(train.features);
  const Eigen::VectorXd y = scaler.transform_y(train.targets);

  auto eng = make_engine(derive_seed(cfg.seed, "mvnn-init"));
  MvnnNetwork net(static_cast<int>(train.dim()), cfg.mvnn_hidden, eng);

  Eigen::VectorXd theta = net.parameters();
  Eigen::VectorXd grad(theta.size());
  Adam adam(theta.size(), cfg.learning_rate);
  const int warmup = cfg.mvnn_epochs / 2;
  double loss = 0.0;
  for (int epoch = 0; epoch < cfg.mvnn_epochs; ++epoch) {
    if (epoch == warmup) adam.reset();
    loss = epoch < warmup ? net.mse(x, y, &grad) : net.nll(x, y, &grad);
    if (!std::isfinite(loss) || !grad.allFinite())
      throw TrainingDivergence("mvnn: non-finite loss", epoch);
    adam.step(theta, grad);
    net.set_parameters(theta);
  }
  loss = net.nll(x, y, nullptr);
  if (!std::isfinite(loss)) throw TrainingDivergence("mvnn: non-finite loss", cfg.mvnn_epochs);
  if (info != nullptr) *info = TrainingInfo{cfg.mvnn_epochs, loss};
  return MvnnModel(std::move(scaler), std::move(net));
}

}  // namespace cplab
