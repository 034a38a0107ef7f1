#include "lsmgp/sparse_gp.hpp"

#include <cmath>
#include <iostream>

namespace lsmgp {

void SparseGPState::refresh_kernel_caches() {
  kmm.resize(kernels.size());
  kmm_llt.resize(kernels.size());
  kmm_inv.resize(kernels.size());
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    kmm[k] = kernel_gram_symmetric(kernels[k], Z);
    kmm_llt[k].compute(kmm[k]);
    if (kmm_llt[k].info() != Eigen::Success)
      throw ConditioningError("K_mm Cholesky failed", static_cast<int>(k));
    Matrix inv = kmm_llt[k].solve(Matrix::Identity(Z.rows(), Z.rows()));
    kmm_inv[k] = 0.5 * (inv + inv.transpose());
  }
}

SparseGPState make_prior_state(Matrix Z, std::vector<KernelConfig> kernels,
                               bool shared_kernel, int n_classes) {
  if (kernels.empty()) throw DimensionError("make_prior_state: no kernel config");
  if (!shared_kernel && static_cast<int>(kernels.size()) != n_classes)
    throw DimensionError("make_prior_state: need one kernel per class");
  SparseGPState st;
  st.Z = std::move(Z);
  st.kernels = std::move(kernels);
  st.shared_kernel = shared_kernel;
  st.refresh_kernel_caches();
  st.mu.resize(n_classes);
  st.sigma.resize(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    st.mu[c] = Vector::Zero(st.Z.rows());
    st.sigma[c] = st.kmm[st.shared_kernel ? 0 : c];
  }
  return st;
}

Matrix select_inducing(const Matrix& X, long m, Rng& rng) {
  const long n = X.rows();
  if (m < 1 || m > n) throw DimensionError("select_inducing: need 1 <= M <= N");
  Matrix Z(m, X.cols());
  Z.row(0) = X.row(static_cast<long>(rng.uniform_index(static_cast<std::size_t>(n))));
  Vector d2(n);
  for (long i = 0; i < n; ++i) d2[i] = (X.row(i) - Z.row(0)).squaredNorm();
  for (long k = 1; k < m; ++k) {
    const double total = d2.sum();
    long pick;
    if (total > 0.0) {
      // D^2 sampling: walk the cumulative weights.
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (long i = 0; i < n; ++i) {
        acc += d2[i];
        if (r <= acc) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with chosen centers.
      pick = static_cast<long>(rng.uniform_index(static_cast<std::size_t>(n)));
    }
    Z.row(k) = X.row(pick);
    for (long i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (X.row(i) - Z.row(k)).squaredNorm());
  }
  return Z;
}

namespace {

// Clamp a variance-like value at zero; warn when it dips beyond tolerance.
double clamp_variance(double v, double tol, const char* what) {
  if (v < -tol) std::cerr << "warning: " << what << " clamped from " << v << " to 0\n";
  return v < 0.0 ? 0.0 : v;
}

}  // namespace

InterpolationCache interpolate(const SparseGPState& state, const Matrix& X_batch) {
  InterpolationCache cache;
  cache.shared = state.shared_kernel;
  const int nk = state.n_kernels();
  cache.kappa.resize(nk);
  cache.ktilde.resize(nk);
  cache.knm.resize(nk);
  for (int k = 0; k < nk; ++k) {
    const KernelConfig& cfg = state.kernels[k];
    const Matrix knm = kernel_gram(cfg, X_batch, state.Z);
    if (state.kmm_llt[static_cast<std::size_t>(k)].info() != Eigen::Success)
      throw ConditioningError("interpolate: stale K_mm factorization", k);
    // kappa = K_nm K_mm^-1 via triangular solves on the transpose.
    Matrix kappa =
        state.kmm_llt[static_cast<std::size_t>(k)].solve(knm.transpose()).transpose();
    // Entries as low as -jitter are expected (e.g. a batch row equal to an
    // inducing input); only dips beyond that indicate conditioning trouble.
    const double tol = 2.0 * cfg.jitter + 1e-12;
    Vector ktilde(X_batch.rows());
    for (long i = 0; i < X_batch.rows(); ++i) {
      const double kii = cfg.variance;  // pure kernel diagonal
      const double v = kii - kappa.row(i).dot(knm.row(i));
      ktilde[i] = clamp_variance(v, tol, "ktilde entry");
    }
    cache.knm[k] = knm;
    cache.kappa[k] = std::move(kappa);
    cache.ktilde[k] = std::move(ktilde);
  }
  return cache;
}

std::pair<Matrix, Matrix> latent_predictive(const SparseGPState& state,
                                            const Matrix& X_test) {
  const InterpolationCache cache = interpolate(state, X_test);
  const long T = X_test.rows();
  const int C = state.n_classes();
  Matrix means(T, C), vars(T, C);
  for (int c = 0; c < C; ++c) {
    const Matrix& kappa = cache.kappa_for(c);
    const Vector& ktilde = cache.ktilde_for(c);
    means.col(c) = kappa * state.mu[c];
    const Vector quad = (kappa * state.sigma[c]).cwiseProduct(kappa).rowwise().sum();
    const double tol = 1e-8 * state.kernel_for(c).variance;
    for (long i = 0; i < T; ++i)
      vars(i, c) = clamp_variance(ktilde[i] + quad[i], tol, "predictive variance");
  }
  return {means, vars};
}

}  // namespace lsmgp
