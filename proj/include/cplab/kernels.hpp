#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP path and a plain serial
// path; the serial path is the reference the tests compare against. Both write
// every output element from the same expression, so results are bitwise equal
// regardless of thread count.

#include <Eigen/Dense>

namespace cplab::kernels {

enum class Exec { Serial, Parallel };

/// Runs fn(i) for i in [0, n).
template <class Fn>
void for_each_index(Eigen::Index n, Fn&& fn, Exec exec = Exec::Parallel) {
  if (exec == Exec::Serial) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) fn(i);
}

/// ARD squared-exponential kernel matrix between the rows of `a` and `b`:
///   k(x, x') = signal_variance * exp(-0.5 * sum_k (x_k - x'_k)^2 / l_k^2).
/// `lengthscales` has either one entry (shared) or one per column.
Eigen::MatrixXd rbf_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double signal_variance, const Eigen::VectorXd& lengthscales,
                          Exec exec = Exec::Parallel);

/// Symmetric Gram matrix of the rows of `x`; exactly symmetric by construction.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double signal_variance,
                         const Eigen::VectorXd& lengthscales, Exec exec = Exec::Parallel);

/// Pairwise squared differences along column `k`, scaled by 1 / l^2.
Eigen::MatrixXd scaled_sq_diff(const Eigen::MatrixXd& x, Eigen::Index k, double lengthscale,
                               Exec exec = Exec::Parallel);

}  // namespace cplab::kernels
