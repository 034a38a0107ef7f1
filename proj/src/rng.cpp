#include "lsmgp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace lsmgp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

Rng Rng::substream(std::uint64_t seed, std::string_view name) {
  std::uint64_t x = seed ^ fnv1a(name);
  return Rng(splitmix64(x));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random bits centered in (0,1): (k + 0.5) * 2^-53 with k in [0, 2^53).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::exponential() { return -std::log(uniform()); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

long Rng::poisson(double rate) {
  if (rate < 0.0 || !std::isfinite(rate))
    throw std::invalid_argument("poisson: rate must be finite and >= 0");
  if (rate == 0.0) return 0;
  if (rate < 30.0) {
    // Knuth's product-of-uniforms method.
    const double exp_neg_rate = std::exp(-rate);
    long k = 0;
    double prod = uniform();
    while (prod > exp_neg_rate) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Hormann's PTRS transformed rejection.
  const double log_rate = std::log(rate);
  const double b = 0.931 + 2.53 * std::sqrt(rate);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const double s = std::log(v * inv_alpha / (a / (us * us) + b));
    const double t = -rate + kd * log_rate - std::lgamma(kd + 1.0);
    if (s <= t) return static_cast<long>(kd);
  }
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
  // Lemire's multiply-shift with rejection; unbiased.
  const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
  while (true) {
    const __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold)
      return static_cast<std::size_t>(m >> 64);
  }
}

}  // namespace lsmgp
