#include "sparsefn/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <omp.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sparsefn/errors.hpp"
#include "sparsefn/noise.hpp"
#include "sparsefn/rates.hpp"
#include "sparsefn/rng.hpp"
#include "sparsefn/stats.hpp"

namespace sparsefn {

LeastFavorablePrior build_prior(const LoadingVector& loading, double alpha, int s, double c1,
                                double c_alpha2, const Tolerances& tol) {
  require(c1 > 0.0 && c1 < 2.0, "c1 must lie in (0, 2)");
  require(c_alpha2 > 0.0 && std::isfinite(c_alpha2), "C_alpha2 must be positive");
  const RateProfile rate = oracle_rate(loading, alpha, s, tol);

  LeastFavorablePrior p;
  p.c1 = c1;
  p.c_alpha2 = c_alpha2;
  p.s = s;
  p.alpha = alpha;
  p.beta = rate.beta;
  p.lambda_o = rate.lambda_o;
  p.nu = rate.nu;
  p.j1 = rate.j1;

  const double beta_plus = std::max(rate.beta, 0.0);
  const auto logs = loading.log_magnitudes();
  const std::size_t d = loading.dim();
  std::vector<double> w(d);  // log(|eta_j| e^{-beta_+/|eta_j|^alpha})
  std::vector<double> e(d);  // log(eta_j^2 e^{-beta_+/|eta_j|^alpha})
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d; ++j) {
    const double decay = beta_plus * std::exp(-alpha * logs[j]);
    w[j] = logs[j] - decay;
    e[j] = 2.0 * logs[j] - decay;
    mx = std::max(mx, e[j]);
  }
  double acc = 0.0;
  for (double x : e) acc += std::exp(x - mx);
  const double log_norm = 0.5 * (mx + std::log(acc));

  const auto vals = loading.values();
  p.pi.resize(d);
  p.gamma.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    p.pi[j] = c1 * std::exp(w[j] - log_norm);
    require(p.pi[j] < 1.0, "activation probability pi_" + std::to_string(j + 1) +
                               " >= 1; reduce c1 for this loading");
    // A positive pi_j below the double range is stored as 0: the coordinate
    // is never activated, which is what any finite sample would show anyway.
    p.gamma[j] = j < p.j1 ? c_alpha2 * (vals[j] > 0.0 ? 1.0 : -1.0)
                          : c_alpha2 * p.lambda_o / vals[j];
  }
  return p;
}

PriorMoments prior_moments(const LeastFavorablePrior& prior, const LoadingVector& loading) {
  const auto vals = loading.values();
  CompensatedSum ms, vs, ml, vl;
  for (std::size_t j = 0; j < prior.pi.size(); ++j) {
    const double pi = prior.pi[j];
    const double c = vals[j] * prior.gamma[j];
    ms.add(pi);
    vs.add(pi * (1.0 - pi));
    ml.add(c * pi);
    vl.add(c * c * pi * (1.0 - pi));
  }
  return {ms.value(), vs.value(), ml.value(), vl.value()};
}

std::vector<double> sample_prior(const LeastFavorablePrior& prior, const LoadingVector& loading,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> theta(prior.pi.size(), 0.0);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (rng.bernoulli(prior.pi[j])) theta[j] = prior.gamma[j];
  }
  return loading.to_original(theta);
}

namespace {

struct Draw {
  double support = 0.0;
  double L = 0.0;
  bool separated = false;
};

Draw one_draw(const LeastFavorablePrior& prior, std::span<const double> vals, double level,
              std::uint64_t seed) {
  Rng rng(seed);
  Draw out;
  int count = 0;
  double L = 0.0;
  for (std::size_t j = 0; j < prior.pi.size(); ++j) {
    if (rng.bernoulli(prior.pi[j])) {
      ++count;
      L += vals[j] * prior.gamma[j];
    }
  }
  out.support = count;
  out.L = L;
  out.separated = count <= prior.s && L >= level;
  return out;
}

PriorSampleStats reduce(const std::vector<Draw>& draws) {
  PriorSampleStats st;
  st.n = draws.size();
  CompensatedSum sup, L;
  std::size_t sep = 0;
  for (const Draw& d : draws) {
    sup.add(d.support);
    L.add(d.L);
    sep += d.separated ? 1 : 0;
  }
  const double n = static_cast<double>(draws.size());
  st.mean_support = sup.value() / n;
  st.mean_L = L.value() / n;
  st.separation_frequency = static_cast<double>(sep) / n;
  return st;
}

double separation_level(const LeastFavorablePrior& p) {
  return p.c1 / 8.0 * p.c_alpha2 * (p.lambda_o * p.s + p.nu);
}

}  // namespace

PriorSampleStats sample_prior_stats(const LeastFavorablePrior& prior, const LoadingVector& loading,
                                    std::size_t n, std::uint64_t seed, int workers) {
  require(n >= 1, "need at least one prior draw");
  std::vector<Draw> draws(n);
  const auto vals = loading.values();
  const double level = separation_level(prior);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(workers > 0 ? workers : omp_get_max_threads())
  for (long long r = 0; r < nn; ++r) {
    draws[static_cast<std::size_t>(r)] =
        one_draw(prior, vals, level, mix_seed(seed, static_cast<std::uint64_t>(r)));
  }
  return reduce(draws);
}

PriorSampleStats sample_prior_stats_serial(const LeastFavorablePrior& prior,
                                           const LoadingVector& loading, std::size_t n,
                                           std::uint64_t seed) {
  require(n >= 1, "need at least one prior draw");
  std::vector<Draw> draws(n);
  const auto vals = loading.values();
  const double level = separation_level(prior);
  for (std::size_t r = 0; r < n; ++r) draws[r] = one_draw(prior, vals, level, mix_seed(seed, r));
  return reduce(draws);
}

Chi2Bound chi2_mixture_bound(const LeastFavorablePrior& prior, double c_alpha1) {
  require(c_alpha1 >= 1.0, "C_alpha1 must be >= 1");
  CompensatedSum acc;
  for (std::size_t j = 0; j < prior.pi.size(); ++j) {
    const double g = std::abs(prior.gamma[j] / prior.c_alpha2);
    acc.add(prior.pi[j] * prior.pi[j] * c_alpha1 * std::exp(std::pow(g, prior.alpha)));
  }
  Chi2Bound b;
  b.exponent = acc.value();
  b.bound = std::exp(b.exponent);
  b.tv_bound = 0.5 * std::sqrt(std::expm1(b.exponent));
  return b;
}

double chi2_shift_exact(double alpha, double shift) {
  require(alpha > 0.0, "alpha must be positive");
  const double sa = sigma_alpha(alpha);
  const double log_norm = std::log(alpha / (2.0 * sa)) - std::lgamma(1.0 / alpha);
  const double g = std::abs(shift);
  // f(x - g)^2 / f(x)
  auto integrand = [&](double x) {
    const double a = std::pow(std::abs(x - g) / sa, alpha);
    const double b = std::pow(std::abs(x) / sa, alpha);
    return std::exp(log_norm - 2.0 * a + b);
  };
  if (g == 0.0) return 1.0;
  boost::math::quadrature::exp_sinh<double> half_line;
  boost::math::quadrature::tanh_sinh<double> finite;
  const double left = half_line.integrate([&](double u) { return integrand(-u); });
  const double middle = finite.integrate(integrand, 0.0, g);
  const double right = half_line.integrate([&](double u) { return integrand(g + u); });
  return left + middle + right;
}

}  // namespace sparsefn
