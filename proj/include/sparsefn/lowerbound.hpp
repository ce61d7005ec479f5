#pragma once

#include <cstdint>
#include <vector>

#include "sparsefn/loading.hpp"
#include "sparsefn/threshold.hpp"

namespace sparsefn {

/// Random-sparsity prior: coordinate j is gamma_j with probability pi_j and
/// zero otherwise, independently. Vectors are in sorted-loading order.
struct LeastFavorablePrior {
  std::vector<double> pi;
  std::vector<double> gamma;
  double c1 = 0.5;
  double c_alpha2 = 1.0;
  int s = 1;
  double alpha = 2.0;
  double beta = 0.0;
  double lambda_o = 0.0;
  double nu = 0.0;
  std::size_t j1 = 0;
};

LeastFavorablePrior build_prior(const LoadingVector& loading, double alpha, int s, double c1,
                                double c_alpha2 = 1.0, const Tolerances& tol = {});

struct PriorMoments {
  double mean_support = 0.0;
  double var_support = 0.0;
  double mean_L = 0.0;
  double var_L = 0.0;
};

PriorMoments prior_moments(const LeastFavorablePrior& prior, const LoadingVector& loading);

/// One draw of theta, returned in the loading's original coordinate order.
std::vector<double> sample_prior(const LeastFavorablePrior& prior, const LoadingVector& loading,
                                 std::uint64_t seed);

struct PriorSampleStats {
  std::size_t n = 0;
  double mean_support = 0.0;
  double mean_L = 0.0;
  /// Frequency of {||theta||_0 <= s and L(theta) >= (c1/8) C2 (lambda_o s + nu)}.
  double separation_frequency = 0.0;
};

/// Draw r uses the stream mix_seed(seed, r); the result does not depend on
/// the worker count.
PriorSampleStats sample_prior_stats(const LeastFavorablePrior& prior, const LoadingVector& loading,
                                    std::size_t n, std::uint64_t seed, int workers = 0);
PriorSampleStats sample_prior_stats_serial(const LeastFavorablePrior& prior,
                                           const LoadingVector& loading, std::size_t n,
                                           std::uint64_t seed);

struct Chi2Bound {
  double exponent = 0.0;  // sum_j pi_j^2 C1 exp(|gamma_j / C2|^alpha)
  double bound = 1.0;     // exp(exponent), bounds 1 + chi^2
  double tv_bound = 0.0;  // sqrt(bound - 1) / 2
};

Chi2Bound chi2_mixture_bound(const LeastFavorablePrior& prior, double c_alpha1 = 1.0);

/// 1 + chi^2 between the density proportional to exp(-|x/sigma_alpha|^alpha)
/// shifted by `shift` and the unshifted density, by numerical quadrature.
double chi2_shift_exact(double alpha, double shift);

}  // namespace sparsefn
