#pragma once

#include <Eigen/Dense>

#include "lsmgp/common.hpp"
#include "lsmgp/rng.hpp"

namespace lsmgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// E[omega] for omega ~ PG(b, c): b/(2c) * tanh(c/2), with the series branch
// b * (1/4 - c^2/48 + c^4/480) below c = 1e-4.
double pg_mean(double b, double c);

// Exact draw from PG(b, c) for integer shape b >= 0: the sum of b independent
// PG(1, c) draws, each by the alternating-series method (Devroye-type
// rejection from a truncated inverse-Gaussian / exponential mixture).
// b = 0 returns 0 (point mass).
double pg_sample(long b, double c, Rng& rng);

// Gaussian complete conditional of one latent GP column:
//   cov  = (diag(omega) + K^-1)^-1
//   mean = 0.5 * cov * (yprime - n)
// computed without forming K^-1, via
//   cov = K - K W^(1/2) (I + W^(1/2) K W^(1/2))^-1 W^(1/2) K,  W = diag(omega).
// Zero omega entries are valid (they simply contribute nothing).
struct GaussianConditional {
  Vector mean;
  Matrix cov;
};

GaussianConditional conditional_f(const Matrix& K, const Vector& omega,
                                  const Vector& yprime, const Vector& n,
                                  int class_index = -1);

// Gamma complete conditional of lambda_i: shape 1 + sum_c n_i^c, rate C.
struct GammaParams {
  double shape;
  double rate;
  double mean() const { return shape / rate; }
};

GammaParams conditional_lambda(const Eigen::VectorXd& n_counts, int n_classes);

// Poisson complete conditional rate of n_i^c given lambda_i and f_i^c:
// lambda * sigmoid(-f). (The count weights sigmoid(-f)^n in the augmented
// likelihood, so large positive f suppresses counts.)
double conditional_n_rate(double lambda, double f);

// Truncated series sum_{n=0}^{N_t} sigmoid(-f)^n Po(n | lambda); converges to
// exp(-lambda * sigmoid(f)). Property-test support.
double poisson_identity_check(double f, double lambda, int truncation);

// Numerical quadrature of int_0^Lambda exp(-lambda z) dlambda with the upper
// limit chosen so the tail is below 1e-12; converges to 1/z.
double gamma_identity_check(double z);

}  // namespace lsmgp
