#include "lsmgp/augmentation.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "lsmgp/likelihood.hpp"

namespace lsmgp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTrunc = 0.64;  // proposal switch point of the Devroye sampler

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Probability that the proposal draws from the exponential tail (x > kTrunc)
// rather than the inverse-Gaussian head.
double mass_texpon(double z) {
  const double t = kTrunc;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + std::log(normal_cdf(b));
  const double xa = x0 + z + std::log(normal_cdf(a));
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Alternating-series coefficients of the Jacobi density.
double a_coef(int n, double x) {
  const double d = n + 0.5;
  if (x > kTrunc) return kPi * d * std::exp(-0.5 * d * d * kPi * kPi * x);
  return kPi * d * std::pow(2.0 / (kPi * x), 1.5) * std::exp(-2.0 * d * d / x);
}

// Inverse-Gaussian IG(mu = 1/z, lambda = 1) truncated to (0, kTrunc].
double rtigauss(double z, Rng& rng) {
  z = std::fabs(z);
  const double t = kTrunc;
  double x = t + 1.0;
  if (1.0 / t > z) {  // mu > t (covers z = 0): rejection from truncated chi
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > t) {
      double y = rng.normal();
      y = y * y;
      const double mu_y = mu * y;
      x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

// One exact PG(1, c) draw: J*(1, c/2) / 4 via the alternating series.
double pg1_sample(double c, Rng& rng) {
  const double z = std::fabs(c) * 0.5;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  while (true) {
    double x;
    if (rng.uniform() < mass_texpon(z))
      x = kTrunc + rng.exponential() / fz;
    else
      x = rtigauss(z, rng);
    double s = a_coef(0, x);
    const double y = rng.uniform() * s;
    int n = 0;
    while (true) {
      ++n;
      if (n % 2 == 1) {
        s -= a_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += a_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace

double pg_mean(double b, double c) {
  if (!(b > 0.0) || c < 0.0) throw DimensionError("pg_mean: need b > 0, c >= 0");
  if (c < 1e-4) {
    const double c2 = c * c;
    return b * (0.25 - c2 / 48.0 + c2 * c2 / 480.0);
  }
  return b / (2.0 * c) * std::tanh(0.5 * c);
}

double pg_sample(long b, double c, Rng& rng) {
  if (b < 0) throw DimensionError("pg_sample: shape must be a nonnegative integer");
  double total = 0.0;
  for (long k = 0; k < b; ++k) total += pg1_sample(c, rng);
  return total;
}

GaussianConditional conditional_f(const Matrix& K, const Vector& omega,
                                  const Vector& yprime, const Vector& n,
                                  int class_index) {
  const long N = K.rows();
  if (K.cols() != N || omega.size() != N || yprime.size() != N || n.size() != N)
    throw DimensionError("conditional_f: shape mismatch");
  if ((omega.array() < 0.0).any())
    throw DimensionError("conditional_f: omega entries must be >= 0");

  const Vector w_sqrt = omega.array().sqrt();
  Matrix B = w_sqrt.asDiagonal() * K * w_sqrt.asDiagonal();
  B.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("conditional_f: Cholesky of (I + W^1/2 K W^1/2) failed",
                            class_index);
  const Matrix KW = K * w_sqrt.asDiagonal();  // N x N
  GaussianConditional out;
  out.cov = K - KW * llt.solve(KW.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.mean = 0.5 * (out.cov * (yprime - n));
  return out;
}

GammaParams conditional_lambda(const Eigen::VectorXd& n_counts, int n_classes) {
  if ((n_counts.array() < 0.0).any())
    throw DimensionError("conditional_lambda: counts must be >= 0");
  return GammaParams{1.0 + n_counts.sum(), static_cast<double>(n_classes)};
}

double conditional_n_rate(double lambda, double f) {
  if (lambda < 0.0) throw DimensionError("conditional_n_rate: lambda must be >= 0");
  return lambda * sigmoid(-f);
}

double poisson_identity_check(double f, double lambda, int truncation) {
  if (lambda < 0.0 || truncation < 1)
    throw DimensionError("poisson_identity_check: need lambda >= 0, truncation >= 1");
  const double s = sigmoid(-f);
  double sum = 0.0;
  double log_pois = -lambda;  // log Po(0 | lambda)
  double log_sn = 0.0;        // log s^n
  for (int n = 0; n <= truncation; ++n) {
    sum += std::exp(log_sn + log_pois);
    log_sn += std::log(s);
    log_pois += std::log(lambda) - std::log1p(n);  // -> log Po(n+1)
    if (lambda == 0.0) break;                      // only the n = 0 term
  }
  return sum;
}

double gamma_identity_check(double z) {
  if (!(z > 0.0)) throw DimensionError("gamma_identity_check: z must be > 0");
  // Upper limit capturing all but < 1e-12 relative tail mass:
  // int_L^inf exp(-l z) dl = exp(-L z)/z, so L = -log(1e-12)/z + slack.
  const double upper = (-std::log(1e-12) + 2.0) / z;
  // Composite Gauss-Legendre (5-point) on a fine grid.
  static const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                  0.5384693101056831, 0.9061798459386640};
  static const double weights[5] = {0.2369268850561891, 0.4786286704993665,
                                    0.5688888888888889, 0.4786286704993665,
                                    0.2369268850561891};
  const int n_panels = 2000;
  const double h = upper / n_panels;
  double total = 0.0;
  for (int p = 0; p < n_panels; ++p) {
    const double mid = (p + 0.5) * h;
    double panel = 0.0;
    for (int q = 0; q < 5; ++q) panel += weights[q] * std::exp(-z * (mid + 0.5 * h * nodes[q]));
    total += 0.5 * h * panel;
  }
  return total;
}

}  // namespace lsmgp
