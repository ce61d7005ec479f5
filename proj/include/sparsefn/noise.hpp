#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsefn/rng.hpp"

namespace sparsefn {

enum class NoiseFamily { gaussian, symm_weibull, rademacher, uniform_sym, shifted_exponential };
enum class NoiseClass { G, H };

std::string to_string(NoiseFamily family);
std::string to_string(NoiseClass cls);
NoiseFamily noise_family_from_string(const std::string& name);
NoiseClass noise_class_from_string(const std::string& name);

/// A mean-zero, unit-variance noise law with its declared tail class.
/// `alpha` and `tau` are the class parameters; for symm_weibull `alpha`
/// is also the shape of the sampler.
struct NoiseModel {
  NoiseFamily family = NoiseFamily::gaussian;
  double alpha = 2.0;
  double tau = 2.0;
  NoiseClass noise_class = NoiseClass::G;

  /// Validated construction. Class G requires a symmetric family.
  static NoiseModel make(NoiseFamily family, double alpha, double tau, NoiseClass cls);
  bool symmetric() const { return family != NoiseFamily::shifted_exponential; }

  bool operator==(const NoiseModel&) const = default;
};

/// sqrt(Gamma(1/alpha) / Gamma(3/alpha)): the scale giving the density
/// proportional to exp(-|x/sigma_alpha|^alpha) unit variance.
double sigma_alpha(double alpha);

/// sigma_alpha (1 - 2^{-alpha})^{-1/alpha}.
double minimal_tau(double alpha);

double draw(const NoiseModel& model, Rng& rng);
void sample_into(const NoiseModel& model, Rng& rng, std::span<double> out);
std::vector<double> sample(const NoiseModel& model, std::size_t n, std::uint64_t seed);

/// Declared class bound on P(|X| >= t): 2exp(-2(t/tau)^alpha) for G,
/// 2exp(-(t/tau)^alpha) for H.
double tail_bound(const NoiseModel& model, double t);

/// The family's exact P(|X| >= t).
double exact_tail(const NoiseModel& model, double t);

struct TailCheckRow {
  double t = 0.0;
  double empirical = 0.0;
  double exact = 0.0;
  double bound = 0.0;
  double margin = 0.0;     // bound - empirical
  double std_error = 0.0;  // binomial standard error of the empirical frequency
  bool pass = false;       // margin >= -3 std_error
};

struct TailCheckReport {
  std::vector<TailCheckRow> rows;
  bool pass = true;
};

TailCheckReport tail_check(const NoiseModel& model, std::span<const double> t_grid, std::size_t n,
                           std::uint64_t seed);

}  // namespace sparsefn
