#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsmgp/dataset.hpp"
#include "lsmgp/sparse_gp.hpp"

namespace lsmgp {

// Augmented variational parameters for every training point:
//   q(lambda_i) = Gamma(alpha_i, beta_i)          (beta_i = C always)
//   q(n_i^c)    = Poisson(gamma_ic)
//   q(omega_ic) = PG(y'_ic + n_ic, b_ic)
// theta_ic = E_q[omega_ic] is derived and kept in sync.
struct LocalVarState {
  Vector alpha;  // N
  Vector beta;   // N, pinned at C
  Matrix gamma;  // N x C
  Matrix b;      // N x C
  Matrix theta;  // N x C
};

struct TrainConfig {
  long m = 200;                // inducing points; 0 or >= N uses Z = X
  bool shared_kernel = true;
  long minibatch_size = 200;   // >= N runs full batch
  long n_iterations = 2000;
  double rho0 = 1.0;           // rho_t = rho0 / (1 + t)^rho_exponent
  double rho_exponent = 0.6;
  int inner_iterations = 5;    // alpha-gamma alternation rounds
  int hyper_period = 10;       // Adam step every k iterations; 0 fixes hyperparameters
  double hyper_lr = 0.01;
  int class_subsample = 0;     // |K|; 0 or C disables subsampling
  std::uint64_t seed = 0;
  int trace_every = 10;        // 0 disables the trace
  int predict_samples = 1000;  // MC draws for held-out metrics in the trace
  int threads = 1;
};

struct TraceRow {
  long iteration;
  double wall_time_s;
  double elbo;
  std::optional<double> test_error;
  std::optional<double> test_nll;
};

struct FitResult {
  SparseGPState state;
  LocalVarState locals;
  std::vector<TraceRow> trace;
  std::vector<std::string> notes;  // provenance lines emitted at the top of the trace CSV
};

// E_q[omega] for shape (yp + gamma) and tilt b; zero shape gives zero.
double theta_entry(double yp, double gamma, double b);

// Per-class posterior moments of f_i under q for one interpolated batch:
// mean_ic = kappa_i mu^c and fbar_ic = sqrt(E[f_ic^2]) >= |mean_ic|.
struct FMoments {
  Matrix mean;  // n x C
  Matrix fbar;  // n x C
};

FMoments compute_f_moments(const SparseGPState& state, const InterpolationCache& cache);

// Closed-form local updates on the given rows: b <- fbar, then
// inner_iterations rounds alternating gamma and alpha (beta stays C).
// `classes` restricts updates to a subset; class_scale = C / |K| makes the
// alpha estimator unbiased under subsampling.
void update_local(LocalVarState& locals, const SparseGPState& state,
                  const InterpolationCache& cache, const Matrix& yp_batch,
                  const std::vector<long>& batch, const std::vector<int>& classes,
                  double class_scale, int inner_iterations);

// Natural-gradient blended global update for each class in `classes`:
// target Sigma-hat = (s kappa^T diag(theta) kappa + K_mm^-1)^-1,
//        mu-hat    = 0.5 Sigma-hat (s kappa^T (y' - gamma)),
// then mu <- (1-rho) mu + rho mu-hat, Sigma <- (1-rho) Sigma + rho Sigma-hat.
void update_global(SparseGPState& state, const LocalVarState& locals,
                   const InterpolationCache& cache, const Matrix& yp_batch,
                   const std::vector<long>& batch, const std::vector<int>& classes,
                   double rho, double data_scale, int threads = 1);

// Evidence lower bound assembled from the augmented conjugate families;
// minibatch rows are scaled by data_scale = N / |batch|.
double elbo(const SparseGPState& state, const LocalVarState& locals,
            const InterpolationCache& cache, const Matrix& yp_batch,
            const std::vector<long>& batch, double data_scale);

// Analytic d ELBO / d [log variance, log l_1..l_D] per kernel config.
std::vector<Vector> elbo_hyper_grad(const SparseGPState& state, const LocalVarState& locals,
                                    const InterpolationCache& cache, const Matrix& x_batch,
                                    const Matrix& yp_batch, const std::vector<long>& batch,
                                    double data_scale);

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Vector> m, v;  // per kernel config

  void init(const std::vector<Vector>& shapes);
  // Ascent step: returns deltas to add to the log-parameters.
  std::vector<Vector> step(const std::vector<Vector>& grads);
};

// One empirical-Bayes step: Adam ascent on the log hyperparameters along the
// analytic ELBO gradient, then kernel cache refresh.
void hyper_step(SparseGPState& state, const LocalVarState& locals,
                const InterpolationCache& cache, const Matrix& x_batch,
                const Matrix& yp_batch, const std::vector<long>& batch, double data_scale,
                AdamState& adam);

// Runs the stochastic CAVI loop (natural-gradient SVI with optional class
// subsampling). Deterministic for a fixed seed in single-threaded mode.
FitResult fit(const LabeledDataset& train, const TrainConfig& config,
              const LabeledDataset* test = nullptr);

}  // namespace lsmgp
