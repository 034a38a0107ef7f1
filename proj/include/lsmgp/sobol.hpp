#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lsmgp/common.hpp"

namespace lsmgp {

// Gray-code Sobol sequence (Joe-Kuo direction numbers, 52 output bits) with
// an optional random digital-shift scramble. The unscrambled point stream is
// a fixed property of the construction; the scramble seed only XORs a
// per-dimension mask onto the integer states.
class SobolSequence {
 public:
  // scramble_seed == 0 leaves the sequence unscrambled (first point is 0).
  explicit SobolSequence(int dim, std::uint64_t scramble_seed = 0);

  int dim() const { return dim_; }

  // Next point in (0,1)^dim (components clamped away from 0 and 1).
  void next(double* out);
  Eigen::VectorXd next();

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint64_t> state_;               // current integer point
  std::vector<std::uint64_t> shift_;               // digital-shift masks
  std::vector<std::vector<std::uint64_t>> v_;      // direction numbers [dim][bits]
};

// Inverse standard-normal CDF; accurate to ~1e-14 over (0,1).
double inverse_normal_cdf(double p);

}  // namespace lsmgp
