#include "lsmgp/sobol.hpp"

#include <bit>
#include <cmath>

#include "lsmgp/rng.hpp"
#include "lsmgp/sobol_directions.hpp"

namespace lsmgp {

namespace {
constexpr int kBits = 52;  // fits the double mantissa exactly
constexpr double kScale = 0x1.0p-52;
constexpr double kEps = 0x1.0p-53;
}  // namespace

SobolSequence::SobolSequence(int dim, std::uint64_t scramble_seed) : dim_(dim) {
  if (dim < 1 || dim > detail::kSobolMaxDim)
    throw DimensionError("SobolSequence: dimension must be in [1, " +
                         std::to_string(detail::kSobolMaxDim) + "]");
  v_.assign(dim_, std::vector<std::uint64_t>(kBits, 0));
  // First dimension: van der Corput, m_i = 1 for all i.
  for (int i = 0; i < kBits; ++i) v_[0][i] = 1;
  for (int d = 1; d < dim_; ++d) {
    const std::uint32_t p = detail::kSobolPoly[d];
    const int deg = std::bit_width(p) - 1;
    for (int i = 0; i < deg; ++i) v_[d][i] = detail::kSobolVinit[d][i];
    for (int i = deg; i < kBits; ++i) {
      std::uint64_t newv = v_[d][i - deg];
      std::uint64_t pow2 = 1;
      for (int k = 0; k < deg; ++k) {
        pow2 <<= 1;
        if ((p >> (deg - 1 - k)) & 1) newv ^= pow2 * v_[d][i - k - 1];
      }
      v_[d][i] = newv;
    }
  }
  // Left-align direction numbers on kBits.
  for (int d = 0; d < dim_; ++d)
    for (int i = 0; i < kBits; ++i) v_[d][i] <<= (kBits - 1 - i);

  state_.assign(dim_, 0);
  shift_.assign(dim_, 0);
  if (scramble_seed != 0) {
    Rng rng = Rng::substream(scramble_seed, "sobol-scramble");
    for (auto& m : shift_) m = rng.next_u64() >> (64 - kBits);
  }
}

void SobolSequence::next(double* out) {
  constexpr double lo = kEps;
  constexpr double hi = 1.0 - kEps;
  for (int d = 0; d < dim_; ++d) {
    const double u = static_cast<double>(state_[d] ^ shift_[d]) * kScale;
    out[d] = u < lo ? lo : (u > hi ? hi : u);
  }
  // Gray-code advance: flip the direction number of the lowest zero bit.
  const int c = std::countr_one(index_);
  for (int d = 0; d < dim_; ++d) state_[d] ^= v_[d][c];
  ++index_;
}

Eigen::VectorXd SobolSequence::next() {
  Eigen::VectorXd x(dim_);
  next(x.data());
  return x;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DimensionError("inverse_normal_cdf: p must be in (0,1)");
  // Logistic-based initial guess, then safeguarded Newton on
  // Phi(x) = 0.5 * erfc(-x / sqrt(2)).
  const double q = p < 0.5 ? p : 1.0 - p;
  double x = std::log(q / (1.0 - q)) / 1.702;
  if (q < 1e-5) x = -std::sqrt(-2.0 * std::log(q));  // tail start
  if (p > 0.5) x = -x;
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  for (int it = 0; it < 60; ++it) {
    const double cdf = 0.5 * std::erfc(-x * inv_sqrt2);
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
    if (pdf <= 0.0) break;
    const double step = (cdf - p) / pdf;
    x -= step;
    if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
  }
  return x;
}

}  // namespace lsmgp
