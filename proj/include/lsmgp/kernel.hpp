#pragma once

#include <Eigen/Dense>

#include "lsmgp/common.hpp"

namespace lsmgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Squared-exponential ARD kernel:
//   k(x, x') = variance * exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2))
//
// Hyperparameters are exposed in log-space for optimization; jitter is an
// absolute value fixed at construction (it does not follow variance updates).
struct KernelConfig {
  double variance = 1.0;
  Vector length_scales;
  double jitter = 1e-5;

  KernelConfig() = default;
  KernelConfig(double variance_, Vector length_scales_, double jitter_ = -1.0);

  int dim() const { return static_cast<int>(length_scales.size()); }
  void validate() const;

  // [log variance, log l_1, ..., log l_D]
  Vector log_params() const;
  void set_log_params(const Vector& lp);
};

double kernel_eval(const KernelConfig& cfg, const Vector& x, const Vector& xp);

// Gradient of kernel_eval w.r.t. the raw hyperparameters [variance, l_1..l_D].
Vector kernel_eval_grad(const KernelConfig& cfg, const Vector& x, const Vector& xp);

// Cross-covariance matrix; entry (i,j) = k(A_i, B_j). If A and B alias the
// same storage the result is treated as symmetric and jitter is added to the
// diagonal.
Matrix kernel_gram(const KernelConfig& cfg, const Matrix& A, const Matrix& B);

// Symmetric Gram of A against itself, jitter on the diagonal.
Matrix kernel_gram_symmetric(const KernelConfig& cfg, const Matrix& A);

// Median of the strictly positive pairwise Euclidean distances of X (an
// evenly strided subsample of at most `max_points` rows is used when N is
// large), replicated across all D dimensions. Errors if all points coincide.
Vector median_heuristic(const Matrix& X, int max_points = 2000);

// d/d[log variance, log l_1..log l_D] of sum_ij P_ij * k(A_i, B_j).
// K is the precomputed pure kernel matrix (no jitter) between A and B.
Vector kernel_grad_contract(const KernelConfig& cfg, const Matrix& P, const Matrix& A,
                            const Matrix& B, const Matrix& K);

}  // namespace lsmgp
