#pragma once

#include <Eigen/Dense>

#include "lsmgp/common.hpp"
#include "lsmgp/rng.hpp"

namespace lsmgp {

using Vector = Eigen::VectorXd;

struct ClassProbabilities {
  Vector probs;
  int n_classes() const { return static_cast<int>(probs.size()); }
};

// Numerically stable logistic function.
double sigmoid(double z);

// Logistic-softmax: probs_k = sigmoid(f_k) / sum_c sigmoid(f_c).
ClassProbabilities logistic_softmax(const Vector& f);

enum class SamplerKind { kMonteCarlo, kQuasiMonteCarlo };

// Class probabilities at a test point given independent per-class Gaussian
// latents: averages logistic_softmax over joint draws f_c ~ N(mean_c, var_c).
// QMC mode maps a scrambled Sobol sequence through the normal inverse CDF.
ClassProbabilities predict_proba(const Vector& means, const Vector& variances,
                                 int n_samples, SamplerKind kind, Rng& rng,
                                 std::uint64_t scramble_seed = 1);

// Argmax class (1-based); ties break to the lowest index.
int classify(const ClassProbabilities& probs);

}  // namespace lsmgp
