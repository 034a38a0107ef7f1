#include "lsmgp/gibbs.hpp"

#include <cmath>
#include <iostream>

#include <Eigen/Cholesky>

#include "lsmgp/augmentation.hpp"

namespace lsmgp {

namespace {

// Draw from N(mean, cov) with a jitter-escalating Cholesky.
Vector mvn_draw(const Vector& mean, Matrix cov, Rng& rng, int class_index) {
  const long n = mean.size();
  const double scale = cov.diagonal().maxCoeff();
  double jit = 1e-12 * (scale > 0.0 ? scale : 1.0);
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) {
      Vector z(n);
      for (long i = 0; i < n; ++i) z[i] = rng.normal();
      return mean + llt.matrixL() * z;
    }
    cov.diagonal().array() += jit;
    jit *= 100.0;
  }
  throw ConditioningError("mvn_draw: conditional covariance not positive definite",
                          class_index);
}

}  // namespace

GibbsSampler::GibbsSampler(const Matrix& X, const std::vector<int>& y, int n_classes,
                           const std::vector<KernelConfig>& kernels, bool shared_kernel,
                           Rng rng)
    : shared_kernel_(shared_kernel), rng_(rng) {
  const long N = X.rows();
  if (static_cast<long>(y.size()) != N) throw DimensionError("GibbsSampler: X/y mismatch");
  if (N > 2000)
    std::cerr << "warning: Gibbs sampler uses dense N x N solves; N = " << N << "\n";
  yp_ = Matrix::Zero(N, n_classes);
  for (long i = 0; i < N; ++i) yp_(i, y[static_cast<std::size_t>(i)] - 1) = 1.0;
  for (const auto& cfg : kernels) K_.push_back(kernel_gram_symmetric(cfg, X));
  if (!shared_kernel_ && static_cast<int>(K_.size()) != n_classes)
    throw DimensionError("GibbsSampler: need one kernel per class");
  f_ = Matrix::Zero(N, n_classes);
  n_ = Matrix::Zero(N, n_classes);
  omega_ = Matrix::Zero(N, n_classes);
  lambda_ = Vector::Ones(N);
}

void GibbsSampler::sweep() {
  const long N = yp_.rows();
  const int C = n_classes();
  // omega | f, n, y
  for (long i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) {
      const long shape = static_cast<long>(yp_(i, c) + n_(i, c));
      omega_(i, c) = shape > 0 ? pg_sample(shape, std::fabs(f_(i, c)), rng_) : 0.0;
    }
  // f | omega, n, y per class
  for (int c = 0; c < C; ++c) {
    const GaussianConditional cond =
        conditional_f(kernel_matrix(c), omega_.col(c), yp_.col(c), n_.col(c), c);
    f_.col(c) = mvn_draw(cond.mean, cond.cov, rng_, c);
  }
  // lambda | n
  for (long i = 0; i < N; ++i) {
    const GammaParams gp = conditional_lambda(n_.row(i).transpose(), C);
    lambda_[i] = rng_.gamma(gp.shape, gp.rate);
  }
  // n | lambda, f
  for (long i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c)
      n_(i, c) = static_cast<double>(rng_.poisson(conditional_n_rate(lambda_[i], f_(i, c))));
  ++iteration_;
}

GibbsResult run_gibbs(const LabeledDataset& train, const std::vector<KernelConfig>& kernels,
                      bool shared_kernel, const GibbsConfig& config) {
  GibbsSampler sampler(train.X, train.y, train.n_classes, kernels, shared_kernel,
                       Rng::substream(config.seed, "gibbs"));
  for (long t = 0; t < config.n_burnin; ++t) sampler.sweep();
  GibbsResult result;
  result.f_samples.reserve(static_cast<std::size_t>(config.n_samples));
  for (long s = 0; s < config.n_samples; ++s) {
    for (int k = 0; k < config.thin; ++k) sampler.sweep();
    result.f_samples.push_back(sampler.f());
  }
  result.n_retained = static_cast<long>(result.f_samples.size());
  if (result.n_retained > 0) {
    result.f_mean = Matrix::Zero(train.n(), train.n_classes);
    for (const auto& f : result.f_samples) result.f_mean += f;
    result.f_mean /= static_cast<double>(result.n_retained);
    result.f_var = Matrix::Zero(train.n(), train.n_classes);
    for (const auto& f : result.f_samples)
      result.f_var += (f - result.f_mean).cwiseProduct(f - result.f_mean);
    result.f_var /= std::max<double>(1.0, static_cast<double>(result.n_retained - 1));
  }
  return result;
}

GibbsPredictive predictive_from_samples(const GibbsResult& result, const Matrix& X_train,
                                        const Matrix& X_test,
                                        const std::vector<KernelConfig>& kernels,
                                        bool shared_kernel, Rng& rng) {
  if (result.n_retained == 0)
    throw DimensionError("predictive_from_samples: empty sample set");
  const long T = X_test.rows();
  const int C = static_cast<int>(result.f_mean.cols());
  const int nk = static_cast<int>(kernels.size());
  if (!shared_kernel && nk != C)
    throw DimensionError("predictive_from_samples: kernel count mismatch");

  // Per kernel config: W = K_nn^-1 K_nt and the conditional variance diag.
  std::vector<Matrix> W(static_cast<std::size_t>(nk));
  std::vector<Vector> cond_var(static_cast<std::size_t>(nk));
  for (int k = 0; k < nk; ++k) {
    const KernelConfig& cfg = kernels[static_cast<std::size_t>(k)];
    const Matrix Knn = kernel_gram_symmetric(cfg, X_train);
    Eigen::LLT<Matrix> llt(Knn);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("predictive_from_samples: K_nn Cholesky failed", k);
    const Matrix Knt = kernel_gram(cfg, X_train, X_test);
    W[static_cast<std::size_t>(k)] = llt.solve(Knt);
    Vector cv(T);
    for (long t = 0; t < T; ++t) {
      const double v =
          cfg.variance - Knt.col(t).dot(W[static_cast<std::size_t>(k)].col(t));
      cv[t] = v > 0.0 ? v : 0.0;
    }
    cond_var[static_cast<std::size_t>(k)] = cv;
  }

  GibbsPredictive out;
  out.probs = Matrix::Zero(T, C);
  out.latent_mean = Matrix::Zero(T, C);
  Matrix mean_sq = Matrix::Zero(T, C);  // accumulates cond-mean second moments

  Matrix cond_mean(T, C);
  Vector fstar(C), sd(C);
  for (const auto& f : result.f_samples) {
    for (int c = 0; c < C; ++c) {
      const std::size_t k = shared_kernel ? 0 : static_cast<std::size_t>(c);
      cond_mean.col(c) = W[k].transpose() * f.col(c);
    }
    out.latent_mean += cond_mean;
    mean_sq += cond_mean.cwiseProduct(cond_mean);
    for (long t = 0; t < T; ++t) {
      for (int c = 0; c < C; ++c) {
        const std::size_t k = shared_kernel ? 0 : static_cast<std::size_t>(c);
        fstar[c] = cond_mean(t, c) + std::sqrt(cond_var[k][t]) * rng.normal();
      }
      out.probs.row(t) += logistic_softmax(fstar).probs.transpose();
    }
  }
  const double S = static_cast<double>(result.n_retained);
  out.probs /= S;
  out.latent_mean /= S;
  out.latent_var = Matrix(T, C);
  for (long t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) {
      const std::size_t k = shared_kernel ? 0 : static_cast<std::size_t>(c);
      const double var_of_mean =
          std::max(0.0, mean_sq(t, c) / S - out.latent_mean(t, c) * out.latent_mean(t, c));
      out.latent_var(t, c) = cond_var[k][t] + var_of_mean;
    }
  return out;
}

double max_gelman_rubin(const std::vector<GibbsResult>& chains) {
  if (chains.size() < 2) throw DimensionError("max_gelman_rubin: need >= 2 chains");
  const long n = chains.front().n_retained;
  for (const auto& ch : chains)
    if (ch.n_retained != n || n < 2)
      throw DimensionError("max_gelman_rubin: chains must have equal length >= 2");
  const long rows = chains.front().f_mean.rows();
  const long cols = chains.front().f_mean.cols();
  const double m = static_cast<double>(chains.size());
  double worst = 0.0;
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c) {
      double mean_of_means = 0.0, w = 0.0;
      for (const auto& ch : chains) {
        mean_of_means += ch.f_mean(i, c);
        w += ch.f_var(i, c);
      }
      mean_of_means /= m;
      w /= m;
      double b = 0.0;
      for (const auto& ch : chains) {
        const double d = ch.f_mean(i, c) - mean_of_means;
        b += d * d;
      }
      b *= static_cast<double>(n) / (m - 1.0);
      const double v_hat = (static_cast<double>(n - 1) / n) * w + b / static_cast<double>(n);
      if (w > 0.0) worst = std::max(worst, std::sqrt(v_hat / w));
    }
  return worst;
}

}  // namespace lsmgp
