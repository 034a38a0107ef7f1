#pragma once

#include <cstdint>
#include <string_view>

namespace lsmgp {

// Deterministic pseudo-random generator (xoshiro256++ seeded via SplitMix64).
//
// All distribution samplers are implemented here rather than taken from
// <random> so that identical seeds give identical streams across compilers
// and standard libraries. Named substreams let one CLI seed drive several
// independent consumers (init, minibatch, mc-predict, gibbs, ...).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, name). Streams with different
  // names never share state.
  static Rng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  // Standard normal via Box-Muller (no spare caching).
  double normal();

  // Exp(1).
  double exponential();

  // Gamma(shape, rate), shape > 0. Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate);

  // Poisson(rate), rate >= 0. Knuth product for small rates, Hormann's
  // transformed rejection (PTRS) for large ones; exact in both regimes.
  long poisson(double rate);

  // Uniform integer in [0, n), n >= 1.
  std::size_t uniform_index(std::size_t n);

 private:
  std::uint64_t s_[4];
};

}  // namespace lsmgp
