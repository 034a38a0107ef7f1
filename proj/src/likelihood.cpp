#include "lsmgp/likelihood.hpp"

#include <cmath>

#include "lsmgp/sobol.hpp"

namespace lsmgp {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ClassProbabilities logistic_softmax(const Vector& f) {
  if (f.size() < 2) throw DimensionError("logistic_softmax: need at least 2 classes");
  if (!f.allFinite()) throw DimensionError("logistic_softmax: non-finite input");
  Vector s(f.size());
  for (long c = 0; c < f.size(); ++c) s[c] = sigmoid(f[c]);
  return ClassProbabilities{s / s.sum()};
}

ClassProbabilities predict_proba(const Vector& means, const Vector& variances,
                                 int n_samples, SamplerKind kind, Rng& rng,
                                 std::uint64_t scramble_seed) {
  const long C = means.size();
  if (variances.size() != C) throw DimensionError("predict_proba: mean/variance size mismatch");
  if ((variances.array() < 0.0).any())
    throw DimensionError("predict_proba: negative variance");
  if (n_samples < 1) throw DimensionError("predict_proba: n_samples must be >= 1");

  const Vector sd = variances.array().sqrt();
  Vector acc = Vector::Zero(C);
  Vector f(C);
  if (kind == SamplerKind::kQuasiMonteCarlo) {
    SobolSequence seq(static_cast<int>(C), scramble_seed);
    std::vector<double> u(C);
    for (int s = 0; s < n_samples; ++s) {
      seq.next(u.data());
      for (long c = 0; c < C; ++c)
        f[c] = means[c] + sd[c] * inverse_normal_cdf(u[static_cast<std::size_t>(c)]);
      acc += logistic_softmax(f).probs;
    }
  } else {
    for (int s = 0; s < n_samples; ++s) {
      for (long c = 0; c < C; ++c) f[c] = means[c] + sd[c] * rng.normal();
      acc += logistic_softmax(f).probs;
    }
  }
  return ClassProbabilities{acc / n_samples};
}

int classify(const ClassProbabilities& probs) {
  int best = 0;
  for (int c = 1; c < probs.n_classes(); ++c)
    if (probs.probs[c] > probs.probs[best]) best = c;
  return best + 1;
}

}  // namespace lsmgp
