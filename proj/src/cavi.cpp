#include "lsmgp/cavi.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "lsmgp/augmentation.hpp"
#include "lsmgp/likelihood.hpp"
#include "lsmgp/special.hpp"

namespace lsmgp {

namespace {
constexpr double kLn2 = 0.6931471805599453094;
}

double theta_entry(double yp, double gamma, double b) {
  const double shape = yp + gamma;
  if (shape <= 0.0) return 0.0;
  return pg_mean(shape, b);
}

FMoments compute_f_moments(const SparseGPState& state, const InterpolationCache& cache) {
  const int C = state.n_classes();
  const long n = cache.kappa_for(0).rows();
  FMoments out{Matrix(n, C), Matrix(n, C)};
  for (int c = 0; c < C; ++c) {
    const Matrix& kappa = cache.kappa_for(c);
    const Vector& ktilde = cache.ktilde_for(c);
    const Vector m = kappa * state.mu[c];
    const Vector quad = (kappa * state.sigma[c]).cwiseProduct(kappa).rowwise().sum();
    const double tol = 1e-8 * state.kernel_for(c).variance;
    for (long i = 0; i < n; ++i) {
      double resid = ktilde[i] + quad[i];
      if (resid < -tol)
        throw ConditioningError("compute_f_moments: negative E[f^2] residual at row " +
                                    std::to_string(i),
                                c);
      if (resid < 0.0) resid = 0.0;
      out.fbar(i, c) = std::sqrt(resid + m[i] * m[i]);
    }
    out.mean.col(c) = m;
  }
  return out;
}

void update_local(LocalVarState& locals, const SparseGPState& state,
                  const InterpolationCache& cache, const Matrix& yp_batch,
                  const std::vector<long>& batch, const std::vector<int>& classes,
                  double class_scale, int inner_iterations) {
  if (inner_iterations < 1) throw DimensionError("update_local: inner_iterations >= 1");
  const FMoments fm = compute_f_moments(state, cache);
  const double C = static_cast<double>(state.n_classes());
  const double log_beta = std::log(C);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const long i = batch[r];
    for (int c : classes) locals.b(i, c) = fm.fbar(static_cast<long>(r), c);
    double alpha_i = locals.alpha[i];
    for (int round = 0; round < inner_iterations; ++round) {
      const double psi_alpha = digamma(alpha_i);
      for (int c : classes) {
        const double m = fm.mean(static_cast<long>(r), c);
        const double f = fm.fbar(static_cast<long>(r), c);
        // exp(psi(alpha))/(2 beta cosh(f/2)) * exp(-m/2), rewritten so the
        // exponent -(m+f)/2 <= 0 can never overflow (f >= |m|).
        const double g = std::exp(psi_alpha - log_beta - 0.5 * (m + f)) /
                         (1.0 + std::exp(-f));
        if (!std::isfinite(g))
          throw ConditioningError("update_local: non-finite gamma at point " +
                                      std::to_string(i) + ", class " + std::to_string(c + 1),
                                  c);
        locals.gamma(i, c) = g;
      }
      double sum = 0.0;
      for (int c : classes) sum += locals.gamma(i, c);
      alpha_i = 1.0 + class_scale * sum;
      if (!std::isfinite(alpha_i))
        throw ConditioningError("update_local: non-finite alpha at point " + std::to_string(i));
    }
    locals.alpha[i] = alpha_i;
    locals.beta[i] = C;
    for (int c : classes)
      locals.theta(i, c) =
          theta_entry(yp_batch(static_cast<long>(r), c), locals.gamma(i, c), locals.b(i, c));
  }
}

void update_global(SparseGPState& state, const LocalVarState& locals,
                   const InterpolationCache& cache, const Matrix& yp_batch,
                   const std::vector<long>& batch, const std::vector<int>& classes,
                   double rho, double data_scale, int threads) {
  (void)threads;  // per-class updates are independent; sequential keeps runs bit-stable
  if (!(rho > 0.0 && rho <= 1.0)) throw DimensionError("update_global: rho must be in (0,1]");
  const long nb = static_cast<long>(batch.size());
  const long M = state.n_inducing();
  for (int c : classes) {
    const int k = state.shared_kernel ? 0 : c;
    const Matrix& kappa = cache.kappa_for(c);
    Vector th(nb), resid(nb);
    for (long r = 0; r < nb; ++r) {
      th[r] = locals.theta(batch[static_cast<std::size_t>(r)], c);
      resid[r] = yp_batch(r, c) - locals.gamma(batch[static_cast<std::size_t>(r)], c);
    }
    Matrix P = state.kmm_inv[static_cast<std::size_t>(k)] +
               data_scale * kappa.transpose() * th.asDiagonal() * kappa;
    P = 0.5 * (P + P.transpose()).eval();
    Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("update_global: precision Cholesky failed", c);
    Matrix sigma_hat = llt.solve(Matrix::Identity(M, M));
    sigma_hat = 0.5 * (sigma_hat + sigma_hat.transpose()).eval();
    const Vector mu_hat = 0.5 * llt.solve(data_scale * (kappa.transpose() * resid));
    state.mu[c] = (1.0 - rho) * state.mu[c] + rho * mu_hat;
    state.sigma[c] = (1.0 - rho) * state.sigma[c] + rho * sigma_hat;
  }
}

double elbo(const SparseGPState& state, const LocalVarState& locals,
            const InterpolationCache& cache, const Matrix& yp_batch,
            const std::vector<long>& batch, double data_scale) {
  const int C = state.n_classes();
  const FMoments fm = compute_f_moments(state, cache);
  double data = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const long i = batch[r];
    const double alpha_i = locals.alpha[i];
    const double beta_i = locals.beta[i];
    const double psi_alpha = digamma(alpha_i);
    const double log_beta = std::log(beta_i);
    double point = 0.0;
    for (int c = 0; c < C; ++c) {
      const double yp = yp_batch(static_cast<long>(r), c);
      const double g = locals.gamma(i, c);
      const double b = locals.b(i, c);
      const double th = locals.theta(i, c);
      const double m = fm.mean(static_cast<long>(r), c);
      const double ef2 = fm.fbar(static_cast<long>(r), c) * fm.fbar(static_cast<long>(r), c);
      // Gaussian-form likelihood term plus the PG tilt correction.
      point += -(yp + g) * kLn2 + 0.5 * (yp - g) * m - 0.5 * ef2 * th -
               (yp + g) * log_cosh(0.5 * b) + 0.5 * b * b * th;
      // Poisson cross-entropy against q(lambda), minus Poisson entropy terms
      // (the E[log n!] pieces cancel exactly).
      point += g * (psi_alpha - log_beta - (g > 0.0 ? std::log(g) : 0.0)) + g -
               alpha_i / beta_i;
    }
    // Entropy of q(lambda); flat improper prior contributes zero.
    point += alpha_i - log_beta + std::lgamma(alpha_i) + (1.0 - alpha_i) * psi_alpha;
    data += point;
  }
  data *= data_scale;

  double kl = 0.0;
  const long M = state.n_inducing();
  for (int c = 0; c < C; ++c) {
    const int k = state.shared_kernel ? 0 : c;
    const auto& llt_k = state.kmm_llt[static_cast<std::size_t>(k)];
    Eigen::LLT<Matrix> llt_s(state.sigma[c]);
    if (llt_s.info() != Eigen::Success)
      throw ConditioningError("elbo: Sigma Cholesky failed", c);
    const double logdet_k =
        2.0 * llt_k.matrixLLT().diagonal().array().log().sum();
    const double logdet_s =
        2.0 * llt_s.matrixLLT().diagonal().array().log().sum();
    const double tr_kinv_s = llt_k.solve(state.sigma[c]).trace();
    const double quad = state.mu[c].dot(llt_k.solve(state.mu[c]));
    kl += 0.5 * (tr_kinv_s + quad - static_cast<double>(M) - logdet_s + logdet_k);
  }
  return data - kl;
}

std::vector<Vector> elbo_hyper_grad(const SparseGPState& state, const LocalVarState& locals,
                                    const InterpolationCache& cache, const Matrix& x_batch,
                                    const Matrix& yp_batch, const std::vector<long>& batch,
                                    double data_scale) {
  const int C = state.n_classes();
  const long nb = static_cast<long>(batch.size());
  const FMoments fm = compute_f_moments(state, cache);
  std::vector<Vector> grads(state.kernels.size());
  for (std::size_t k = 0; k < grads.size(); ++k)
    grads[k] = Vector::Zero(1 + state.kernels[k].dim());

  for (int c = 0; c < C; ++c) {
    const std::size_t k = state.shared_kernel ? 0 : static_cast<std::size_t>(c);
    const KernelConfig& cfg = state.kernels[k];
    const Matrix& kappa = cache.kappa_for(c);
    const Matrix& knm = cache.knm_for(c);
    const auto& llt = state.kmm_llt[k];

    Vector w1(nb), w2(nb);
    for (long r = 0; r < nb; ++r) {
      const long i = batch[static_cast<std::size_t>(r)];
      w1[r] = 0.5 * data_scale * (yp_batch(r, c) - locals.gamma(i, c));
      w2[r] = 0.5 * data_scale * locals.theta(i, c);
    }
    const Vector m = fm.mean.col(c);

    // dL/d kappa, collected as V; then the chain rule through
    // kappa = K_nm K_mm^-1 splits V into K_nm and K_mm cotangents.
    Matrix V = (w1 - 2.0 * w2.cwiseProduct(m)) * state.mu[c].transpose() +
               w2.asDiagonal() * (knm - 2.0 * kappa * state.sigma[c]);
    Matrix v_kinv = llt.solve(V.transpose()).transpose();
    Matrix g1 = v_kinv + w2.asDiagonal() * kappa;
    Matrix g2 = -kappa.transpose() * v_kinv;

    // KL contribution: d(-KL)/dK_mm.
    const Matrix& kinv = state.kmm_inv[k];
    const Vector kinv_mu = llt.solve(state.mu[c]);
    g2 += 0.5 * (kinv * state.sigma[c] * kinv + kinv_mu * kinv_mu.transpose() - kinv);

    Matrix kmm_pure = state.kmm[k];
    kmm_pure.diagonal().array() -= cfg.jitter;
    grads[k] += kernel_grad_contract(cfg, g1, x_batch, state.Z, knm);
    grads[k] += kernel_grad_contract(cfg, g2, state.Z, state.Z, kmm_pure);
    // K_nn diagonal enters only through ktilde with weight -w2; its only
    // nonzero derivative is w.r.t. log variance.
    grads[k][0] += -w2.sum() * cfg.variance;
  }
  return grads;
}

void AdamState::init(const std::vector<Vector>& shapes) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& s : shapes) {
    m.push_back(Vector::Zero(s.size()));
    v.push_back(Vector::Zero(s.size()));
  }
}

std::vector<Vector> AdamState::step(const std::vector<Vector>& grads) {
  if (m.size() != grads.size()) init(grads);
  ++t;
  std::vector<Vector> deltas(grads.size());
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < grads.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
    const Vector m_hat = m[k] / bc1;
    const Vector v_hat = v[k] / bc2;
    deltas[k] = lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
  return deltas;
}

void hyper_step(SparseGPState& state, const LocalVarState& locals,
                const InterpolationCache& cache, const Matrix& x_batch,
                const Matrix& yp_batch, const std::vector<long>& batch, double data_scale,
                AdamState& adam) {
  const std::vector<Vector> grads =
      elbo_hyper_grad(state, locals, cache, x_batch, yp_batch, batch, data_scale);
  for (const auto& g : grads)
    if (!g.allFinite()) throw ConditioningError("hyper_step: non-finite ELBO gradient");
  const std::vector<Vector> deltas = adam.step(grads);
  for (std::size_t k = 0; k < state.kernels.size(); ++k)
    state.kernels[k].set_log_params(state.kernels[k].log_params() + deltas[k]);
  state.refresh_kernel_caches();
}

namespace {

LocalVarState make_initial_locals(const SparseGPState& state, const Matrix& yp) {
  const long N = yp.rows();
  const int C = state.n_classes();
  LocalVarState locals;
  locals.alpha = Vector::Constant(N, 2.0);
  locals.beta = Vector::Constant(N, static_cast<double>(C));
  locals.gamma = Matrix::Constant(N, C, 1.0 / C);
  locals.b = Matrix(N, C);
  locals.theta = Matrix(N, C);
  for (int c = 0; c < C; ++c) {
    const double prior_fbar = std::sqrt(state.kernel_for(c).variance);
    for (long i = 0; i < N; ++i) {
      locals.b(i, c) = prior_fbar;
      locals.theta(i, c) = theta_entry(yp(i, c), locals.gamma(i, c), prior_fbar);
    }
  }
  return locals;
}

struct HeldOutMetrics {
  double error;
  double nll;
};

HeldOutMetrics held_out_metrics(const SparseGPState& state, const LabeledDataset& test,
                                int n_samples, Rng& rng) {
  const auto [means, vars] = latent_predictive(state, test.X);
  long n_wrong = 0;
  double nll = 0.0;
  for (long i = 0; i < test.n(); ++i) {
    const ClassProbabilities probs = predict_proba(
        means.row(i).transpose(), vars.row(i).transpose(), n_samples,
        SamplerKind::kMonteCarlo, rng);
    if (classify(probs) != test.y[static_cast<std::size_t>(i)]) ++n_wrong;
    nll -= std::log(std::max(probs.probs[test.y[static_cast<std::size_t>(i)] - 1], 1e-12));
  }
  return {static_cast<double>(n_wrong) / static_cast<double>(test.n()),
          nll / static_cast<double>(test.n())};
}

}  // namespace

FitResult fit(const LabeledDataset& train, const TrainConfig& config,
              const LabeledDataset* test) {
  const long N = train.n();
  const int C = train.n_classes;
  if (C < 2) throw DimensionError("fit: need at least 2 classes");
  if (N < 1) throw DimensionError("fit: empty training set");
  if (config.class_subsample < 0 || config.class_subsample > C)
    throw DimensionError("fit: class_subsample must be in [0, C]");

  Rng rng_init = Rng::substream(config.seed, "init");
  Rng rng_minibatch = Rng::substream(config.seed, "minibatch");
  Rng rng_classes = Rng::substream(config.seed, "class-subsample");
  Rng rng_eval = Rng::substream(config.seed, "mc-predict");

  // Kernel init per the usual recipe: unit variance, median-heuristic scales.
  KernelConfig base_cfg(1.0, median_heuristic(train.X));
  std::vector<KernelConfig> kernels;
  if (config.shared_kernel)
    kernels.push_back(base_cfg);
  else
    kernels.assign(static_cast<std::size_t>(C), base_cfg);

  const bool full_m = config.m <= 0 || config.m >= N;
  Matrix Z = full_m ? train.X : select_inducing(train.X, config.m, rng_init);
  SparseGPState state = make_prior_state(std::move(Z), std::move(kernels),
                                         config.shared_kernel, C);

  const Matrix yp = train.one_hot();
  LocalVarState locals = make_initial_locals(state, yp);

  FitResult result;
  if (config.class_subsample > 0 && config.class_subsample < C)
    result.notes.push_back("# class_subsample=" + std::to_string(config.class_subsample) +
                           " of C=" + std::to_string(C) +
                           "; alpha from scaled estimator; q(lambda) recomputed from noisy "
                           "alpha each iteration");

  const bool full_batch = config.minibatch_size <= 0 || config.minibatch_size >= N;
  const long batch_size = full_batch ? N : config.minibatch_size;
  const double data_scale = static_cast<double>(N) / static_cast<double>(batch_size);

  std::vector<long> all_points(N);
  std::iota(all_points.begin(), all_points.end(), 0);
  std::vector<int> all_classes(C);
  std::iota(all_classes.begin(), all_classes.end(), 0);
  const bool subsample_classes =
      config.class_subsample > 0 && config.class_subsample < C;
  const double class_scale =
      subsample_classes ? static_cast<double>(C) / config.class_subsample : 1.0;

  AdamState adam;
  adam.lr = config.hyper_lr;

  InterpolationCache cache;
  bool full_cache_valid = false;
  std::vector<long> batch;
  std::vector<int> classes;
  Matrix x_batch, yp_batch;  // gathered rows (minibatch mode only)

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  for (long t = 1; t <= config.n_iterations; ++t) {
    const double rho = config.rho0 / std::pow(1.0 + static_cast<double>(t),
                                              config.rho_exponent);

    if (full_batch) {
      batch = all_points;
    } else {
      // Partial Fisher-Yates over a persistent permutation: O(|S|) a step.
      for (long k = 0; k < batch_size; ++k) {
        const std::size_t j = static_cast<std::size_t>(k) +
                              rng_minibatch.uniform_index(static_cast<std::size_t>(N - k));
        std::swap(all_points[static_cast<std::size_t>(k)], all_points[j]);
      }
      batch.assign(all_points.begin(), all_points.begin() + batch_size);
    }

    if (subsample_classes) {
      for (int k = 0; k < config.class_subsample; ++k) {
        const std::size_t j = static_cast<std::size_t>(k) +
                              rng_classes.uniform_index(static_cast<std::size_t>(C - k));
        std::swap(all_classes[static_cast<std::size_t>(k)], all_classes[j]);
      }
      classes.assign(all_classes.begin(), all_classes.begin() + config.class_subsample);
      std::sort(classes.begin(), classes.end());
    } else {
      classes = all_classes;
    }

    const Matrix& x_cur = full_batch ? train.X : x_batch;
    const Matrix& yp_cur = full_batch ? yp : yp_batch;
    if (full_batch) {
      if (!full_cache_valid) {
        cache = interpolate(state, train.X);
        full_cache_valid = true;
      }
    } else {
      x_batch.resize(batch_size, train.dim());
      yp_batch.resize(batch_size, C);
      for (long r = 0; r < batch_size; ++r) {
        x_batch.row(r) = train.X.row(batch[static_cast<std::size_t>(r)]);
        yp_batch.row(r) = yp.row(batch[static_cast<std::size_t>(r)]);
      }
      cache = interpolate(state, x_batch);
    }

    update_local(locals, state, cache, yp_cur, batch, classes, class_scale,
                 config.inner_iterations);
    update_global(state, locals, cache, yp_cur, batch, classes, rho, data_scale,
                  config.threads);

    if (config.hyper_period > 0 && t % config.hyper_period == 0) {
      hyper_step(state, locals, cache, x_cur, yp_cur, batch, data_scale, adam);
      cache = interpolate(state, x_cur);
      full_cache_valid = full_batch;
    }

    if (config.trace_every > 0 &&
        (t % config.trace_every == 0 || t == config.n_iterations)) {
      TraceRow row;
      row.iteration = t;
      row.elbo = elbo(state, locals, cache, yp_cur, batch, data_scale);
      if (test != nullptr && test->n() > 0) {
        const HeldOutMetrics hm =
            held_out_metrics(state, *test, config.predict_samples, rng_eval);
        row.test_error = hm.error;
        row.test_nll = hm.nll;
      }
      row.wall_time_s = elapsed();
      result.trace.push_back(row);
    }
  }

  result.state = std::move(state);
  result.locals = std::move(locals);
  return result;
}

}  // namespace lsmgp
