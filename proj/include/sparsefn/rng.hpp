#pragma once

#include <cstdint>
#include <string_view>

namespace sparsefn {

/// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Order-sensitive combination of two 64-bit keys into a stream seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::string_view key);

/// xoshiro256** seeded through splitmix64. Every variate below is built from
/// raw 64-bit outputs with fixed arithmetic, so streams are reproducible
/// across compilers and standard libraries (std:: distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal, Marsaglia polar method (the spare draw is cached).
  double normal();
  /// Unit-rate exponential by inversion.
  double exponential();
  /// Unit-rate gamma with the given shape (Marsaglia-Tsang; shapes below
  /// one use the boost G(a) = G(a + 1) U^{1/a}).
  double gamma(double shape);
  /// log of a gamma(shape) variate; stays finite for tiny shapes where the
  /// variate itself underflows.
  double log_gamma_variate(double shape);
  bool bernoulli(double p);
  /// +1 or -1 with equal probability.
  double sign();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sparsefn
