#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lsmgp/kernel.hpp"
#include "lsmgp/rng.hpp"

namespace lsmgp {

// Per-class variational sparse GP state. All classes share the inducing
// inputs Z (selected once, then fixed); kernel hyperparameters are either
// shared (one config) or independent (one per class).
struct SparseGPState {
  Matrix Z;  // M x D
  std::vector<KernelConfig> kernels;
  bool shared_kernel = true;
  std::vector<Vector> mu;     // C x (M)
  std::vector<Matrix> sigma;  // C x (M x M)

  // Caches, consistent with the current kernels; refresh after hyper steps.
  std::vector<Matrix> kmm;                  // jittered symmetric Gram(s)
  std::vector<Eigen::LLT<Matrix>> kmm_llt;  // factor per kernel config
  std::vector<Matrix> kmm_inv;              // explicit inverse per kernel config

  int n_classes() const { return static_cast<int>(mu.size()); }
  long n_inducing() const { return Z.rows(); }
  const KernelConfig& kernel_for(int c) const {
    return kernels[shared_kernel ? 0 : static_cast<std::size_t>(c)];
  }
  KernelConfig& kernel_for(int c) {
    return kernels[shared_kernel ? 0 : static_cast<std::size_t>(c)];
  }
  int n_kernels() const { return static_cast<int>(kernels.size()); }

  void refresh_kernel_caches();
};

// Prior-initialized state: mu = 0, Sigma = K_mm.
SparseGPState make_prior_state(Matrix Z, std::vector<KernelConfig> kernels,
                               bool shared_kernel, int n_classes);

// kmeans++ seeding (D^2 sampling) over the rows of X; the returned rows are
// then held fixed during training. Deterministic for a fixed generator state.
Matrix select_inducing(const Matrix& X, long m, Rng& rng);

// kappa = K_nm K_mm^-1 and the residual conditional variance diagonal
// ktilde = diag(K_nn - kappa K_mn), clamped at zero. One entry when the
// kernel is shared, C entries otherwise.
struct InterpolationCache {
  std::vector<Matrix> kappa;
  std::vector<Vector> ktilde;
  std::vector<Matrix> knm;  // raw cross Gram(s), kept for hyper gradients
  bool shared = true;

  const Matrix& kappa_for(int c) const {
    return kappa[shared ? 0 : static_cast<std::size_t>(c)];
  }
  const Vector& ktilde_for(int c) const {
    return ktilde[shared ? 0 : static_cast<std::size_t>(c)];
  }
  const Matrix& knm_for(int c) const {
    return knm[shared ? 0 : static_cast<std::size_t>(c)];
  }
};

InterpolationCache interpolate(const SparseGPState& state, const Matrix& X_batch);

// Latent predictive moments at test rows: mean = kappa mu,
// var = ktilde + diag(kappa Sigma kappa^T), clamped at zero. Returns T x C
// matrices (means, variances).
std::pair<Matrix, Matrix> latent_predictive(const SparseGPState& state,
                                            const Matrix& X_test);

}  // namespace lsmgp
