#include "cplab/kernels.hpp"

#include <cmath>

namespace cplab::kernels {

namespace {

Eigen::VectorXd inverse_sq_lengthscales(const Eigen::VectorXd& ls, Eigen::Index dim) {
  Eigen::VectorXd inv(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double l = ls.size() == 1 ? ls(0) : ls(k);
    inv(k) = 1.0 / (l * l);
  }
  return inv;
}

}  // namespace

Eigen::MatrixXd rbf_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double signal_variance, const Eigen::VectorXd& lengthscales, Exec exec) {
  const Eigen::Index d = a.cols();
  const Eigen::VectorXd inv = inverse_sq_lengthscales(lengthscales, d);
  Eigen::MatrixXd k(a.rows(), b.rows());
  // Column-major output: one task per column of b.
  for_each_index(
      b.rows(),
      [&](Eigen::Index j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          double s = 0.0;
          for (Eigen::Index c = 0; c < d; ++c) {
            const double diff = a(i, c) - b(j, c);
            s += diff * diff * inv(c);
          }
          k(i, j) = signal_variance * std::exp(-0.5 * s);
        }
      },
      exec);
  return k;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double signal_variance,
                         const Eigen::VectorXd& lengthscales, Exec exec) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd inv = inverse_sq_lengthscales(lengthscales, d);
  Eigen::MatrixXd k(n, n);
  for_each_index(
      n,
      [&](Eigen::Index j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          double s = 0.0;
          for (Eigen::Index c = 0; c < d; ++c) {
            const double diff = x(i, c) - x(j, c);
            s += diff * diff * inv(c);
          }
          k(i, j) = signal_variance * std::exp(-0.5 * s);
        }
      },
      exec);
  k.triangularView<Eigen::StrictlyLower>() = k.transpose().triangularView<Eigen::StrictlyLower>();
  return k;
}

Eigen::MatrixXd scaled_sq_diff(const Eigen::MatrixXd& x, Eigen::Index k, double lengthscale,
                               Exec exec) {
  const Eigen::Index n = x.rows();
  const double inv = 1.0 / (lengthscale * lengthscale);
  Eigen::MatrixXd out(n, n);
  for_each_index(
      n,
      [&](Eigen::Index j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double diff = x(i, k) - x(j, k);
          out(i, j) = diff * diff * inv;
        }
      },
      exec);
  return out;
}

}  // namespace cplab::kernels
