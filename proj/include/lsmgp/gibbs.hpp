#pragma once

#include <vector>

#include "lsmgp/dataset.hpp"
#include "lsmgp/kernel.hpp"
#include "lsmgp/likelihood.hpp"
#include "lsmgp/rng.hpp"

namespace lsmgp {

// Exact Gibbs sampler over the augmented posterior on the full (non-sparse)
// model. One chain is strictly sequential; run several chains with distinct
// seeds for convergence diagnostics.
class GibbsSampler {
 public:
  GibbsSampler(const Matrix& X, const std::vector<int>& y, int n_classes,
               const std::vector<KernelConfig>& kernels, bool shared_kernel,
               Rng rng);

  // One full sweep: omega | f,n -> f | omega,n -> lambda | n -> n | lambda,f.
  void sweep();

  long iteration() const { return iteration_; }
  const Matrix& f() const { return f_; }
  const Matrix& n_counts() const { return n_; }
  const Matrix& omega() const { return omega_; }
  const Vector& lambda() const { return lambda_; }
  int n_classes() const { return static_cast<int>(yp_.cols()); }

  const Matrix& kernel_matrix(int c) const {
    return K_[shared_kernel_ ? 0 : static_cast<std::size_t>(c)];
  }

 private:
  Matrix yp_;      // N x C one-hot labels
  std::vector<Matrix> K_;
  bool shared_kernel_;
  Matrix f_, n_, omega_;  // N x C
  Vector lambda_;         // N
  Rng rng_;
  long iteration_ = 0;
};

struct GibbsConfig {
  long n_burnin = 1000;
  long n_samples = 300;  // retained draws
  int thin = 5;
  std::uint64_t seed = 0;
};

struct GibbsResult {
  std::vector<Matrix> f_samples;  // retained f draws, each N x C
  Matrix f_mean, f_var;           // posterior moments over retained draws
  long n_retained = 0;
};

GibbsResult run_gibbs(const LabeledDataset& train, const std::vector<KernelConfig>& kernels,
                      bool shared_kernel, const GibbsConfig& config);

// Exact-GP predictive at test rows: for every retained f draw, condition the
// latent GP on it, draw f_star from the conditional, map through the
// logistic-softmax, and average. Also returns the posterior latent moments
// at the test rows (law of total variance over draws).
struct GibbsPredictive {
  Matrix probs;        // T x C
  Matrix latent_mean;  // T x C
  Matrix latent_var;   // T x C
};

GibbsPredictive predictive_from_samples(const GibbsResult& result, const Matrix& X_train,
                                        const Matrix& X_test,
                                        const std::vector<KernelConfig>& kernels,
                                        bool shared_kernel, Rng& rng);

// Split-free Gelman-Rubin statistic from per-chain summaries; all chains must
// have equal retained counts. Returns the maximum over (point, class) cells.
double max_gelman_rubin(const std::vector<GibbsResult>& chains);

}  // namespace lsmgp
