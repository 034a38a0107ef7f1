#include "lsmgp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lsmgp {

KernelConfig::KernelConfig(double variance_, Vector length_scales_, double jitter_)
    : variance(variance_),
      length_scales(std::move(length_scales_)),
      jitter(jitter_ > 0.0 ? jitter_ : 1e-5 * variance_) {
  validate();
}

void KernelConfig::validate() const {
  if (!(variance > 0.0)) throw DimensionError("kernel variance must be > 0");
  if (length_scales.size() == 0) throw DimensionError("kernel needs at least one length scale");
  if ((length_scales.array() <= 0.0).any())
    throw DimensionError("kernel length scales must be > 0");
  if (!(jitter > 0.0)) throw DimensionError("kernel jitter must be > 0");
}

Vector KernelConfig::log_params() const {
  Vector lp(1 + dim());
  lp[0] = std::log(variance);
  lp.tail(dim()) = length_scales.array().log();
  return lp;
}

void KernelConfig::set_log_params(const Vector& lp) {
  if (lp.size() != 1 + dim()) throw DimensionError("log_params size mismatch");
  variance = std::exp(lp[0]);
  length_scales = lp.tail(dim()).array().exp();
}

double kernel_eval(const KernelConfig& cfg, const Vector& x, const Vector& xp) {
  if (x.size() != cfg.dim() || xp.size() != cfg.dim())
    throw DimensionError("kernel_eval: input dimension does not match config");
  const double d2 = ((x - xp).array() / cfg.length_scales.array()).square().sum();
  return cfg.variance * std::exp(-0.5 * d2);
}

Vector kernel_eval_grad(const KernelConfig& cfg, const Vector& x, const Vector& xp) {
  const double k = kernel_eval(cfg, x, xp);
  Vector g(1 + cfg.dim());
  g[0] = k / cfg.variance;  // d/d variance
  const Eigen::ArrayXd diff2 = (x - xp).array().square();
  // d/d l_d = k * (x_d - x'_d)^2 / l_d^3
  g.tail(cfg.dim()) = k * diff2 / cfg.length_scales.array().cube();
  return g;
}

namespace {

// Scaled squared-distance matrix between row sets; entries clamped at 0.
Matrix scaled_sqdist(const KernelConfig& cfg, const Matrix& A, const Matrix& B) {
  const Eigen::ArrayXd inv_l = cfg.length_scales.array().inverse();
  const Matrix As = A * inv_l.matrix().asDiagonal();
  const Matrix Bs = B * inv_l.matrix().asDiagonal();
  const Vector a2 = As.rowwise().squaredNorm();
  const Vector b2 = Bs.rowwise().squaredNorm();
  Matrix d2 = -2.0 * As * Bs.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace

Matrix kernel_gram(const KernelConfig& cfg, const Matrix& A, const Matrix& B) {
  if (A.rows() == 0 || B.rows() == 0) throw DimensionError("kernel_gram: empty input");
  if (A.cols() != cfg.dim() || B.cols() != cfg.dim())
    throw DimensionError("kernel_gram: input dimension does not match config");
  const bool aliased = A.data() == B.data() && A.rows() == B.rows();
  if (aliased) return kernel_gram_symmetric(cfg, A);
  Matrix K = scaled_sqdist(cfg, A, B);
  K = cfg.variance * (-0.5 * K.array()).exp();
  return K;
}

Matrix kernel_gram_symmetric(const KernelConfig& cfg, const Matrix& A) {
  if (A.rows() == 0) throw DimensionError("kernel_gram_symmetric: empty input");
  if (A.cols() != cfg.dim())
    throw DimensionError("kernel_gram_symmetric: input dimension does not match config");
  Matrix K = scaled_sqdist(cfg, A, A);
  K = cfg.variance * (-0.5 * K.array()).exp();
  K = 0.5 * (K + K.transpose()).eval();
  K.diagonal().setConstant(cfg.variance + cfg.jitter);
  return K;
}

Vector median_heuristic(const Matrix& X, int max_points) {
  const long n_total = X.rows();
  if (n_total < 2) throw DimensionError("median_heuristic: need at least 2 points");
  // Evenly strided deterministic subsample keeps init reproducible.
  std::vector<long> idx;
  if (n_total > max_points) {
    idx.reserve(max_points);
    for (int i = 0; i < max_points; ++i) idx.push_back(i * n_total / max_points);
  } else {
    idx.resize(n_total);
    for (long i = 0; i < n_total; ++i) idx[i] = i;
  }
  const long n = static_cast<long>(idx.size());
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      const double d = (X.row(idx[i]) - X.row(idx[j])).norm();
      if (d > 0.0) dists.push_back(d);
    }
  if (dists.empty()) throw DimensionError("median_heuristic: all points are identical");
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med =
      (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return Vector::Constant(X.cols(), med);
}

Vector kernel_grad_contract(const KernelConfig& cfg, const Matrix& P, const Matrix& A,
                            const Matrix& B, const Matrix& K) {
  if (P.rows() != A.rows() || P.cols() != B.rows() || K.rows() != P.rows() ||
      K.cols() != P.cols())
    throw DimensionError("kernel_grad_contract: shape mismatch");
  const int D = cfg.dim();
  Vector g = Vector::Zero(1 + D);
  const Matrix PK = P.cwiseProduct(K);
  g[0] = PK.sum();  // every entry scales linearly with variance
  const Vector row_sum = PK.rowwise().sum();
  const Vector col_sum = PK.colwise().sum();
  for (int d = 0; d < D; ++d) {
    const Vector ad = A.col(d);
    const Vector bd = B.col(d);
    // sum_ij PK_ij (a_id - b_jd)^2 expanded to avoid an n x m temporary
    const double term = ad.array().square().matrix().dot(row_sum) -
                        2.0 * ad.dot(PK * bd) +
                        bd.array().square().matrix().dot(col_sum);
    g[1 + d] = term / (cfg.length_scales[d] * cfg.length_scales[d]);
  }
  return g;
}

}  // namespace lsmgp
