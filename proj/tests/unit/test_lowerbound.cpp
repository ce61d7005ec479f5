#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sparsefn/errors.hpp"
#include "sparsefn/lowerbound.hpp"
#include "sparsefn/noise.hpp"
#include "sparsefn/rates.hpp"

using namespace sparsefn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LoadingVector ones(std::size_t d) { return LoadingVector::from_values(std::vector<double>(d, 1.0)); }

}  // namespace

TEST_CASE("homogeneous prior fixture", "[lowerbound]") {
  const auto v = ones(100);
  const auto p = build_prior(v, 2.0, 5, 1.0);
  REQUIRE(p.pi.size() == 100);
  for (double x : p.pi) CHECK_THAT(x, WithinRel(0.025, 1e-9));
  for (double g : p.gamma) CHECK_THAT(g, WithinRel(p.lambda_o, 1e-14));
  const auto m = prior_moments(p, v);
  CHECK_THAT(m.mean_support, WithinRel(2.5, 1e-9));
  CHECK_THAT(m.var_support, WithinRel(2.4375, 1e-9));
  CHECK(m.mean_L >= 0.25 * (p.lambda_o * 5 + p.nu));
  CHECK(m.var_L <= p.c_alpha2 * std::max(1.0, p.lambda_o) * m.mean_L);

  const Chi2Bound b = chi2_mixture_bound(p);
  double expected = 0.0;
  for (std::size_t j = 0; j < 100; ++j) expected += p.pi[j] * p.pi[j] * std::exp(p.gamma[j] * p.gamma[j]);
  CHECK_THAT(b.exponent, WithinRel(expected, 1e-12));
  CHECK_THAT(b.bound, WithinRel(std::exp(expected), 1e-12));
  CHECK_THAT(b.tv_bound, WithinRel(0.5 * std::sqrt(std::expm1(expected)), 1e-12));
}

TEST_CASE("plug-in coordinates carry the constant itself", "[lowerbound]") {
  const auto v = LoadingVector::from_values({-3.0, 2.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05});
  const auto p = build_prior(v, 2.0, 2, 0.5, 1.5);
  REQUIRE(p.j1 >= 1);
  CHECK(p.pi.back() == 0.0);  // exp(-beta / 0.05^2) is below the double range
  for (std::size_t j = 0; j < v.dim(); ++j) {
    const double expected = 1.5 * std::max(std::abs(v[j]), p.lambda_o);
    CHECK_THAT(v[j] * p.gamma[j], WithinRel(expected, 1e-12));
    if (j > 0) CHECK(v[j] * p.gamma[j] <= v[j - 1] * p.gamma[j - 1] * (1.0 + 1e-14));
  }
}

TEST_CASE("d = 1 prior has closed-form moments", "[lowerbound]") {
  const auto v = ones(1);
  const auto p = build_prior(v, 2.0, 1, 0.5);
  const RateProfile r = oracle_rate(v, 2.0, 1);
  // pi = c1 e^{-beta/2}, and e^{-beta/2} = 1/2 at s = 1.
  CHECK_THAT(p.pi[0], WithinRel(0.25, 1e-9));
  CHECK_THAT(p.gamma[0], WithinRel(r.lambda_o, 1e-14));
  const auto m = prior_moments(p, v);
  CHECK_THAT(m.mean_support, WithinRel(0.25, 1e-9));
  CHECK_THAT(m.var_support, WithinRel(0.1875, 1e-9));
  CHECK_THAT(m.mean_L, WithinRel(0.25 * r.lambda_o, 1e-9));
  CHECK_THAT(m.var_L, WithinRel(0.1875 * r.lambda_o * r.lambda_o, 1e-9));
}

TEST_CASE("prior construction validates its inputs", "[lowerbound]") {
  const auto v = ones(4);
  // lambda_o = 0: pi_j = c1 |eta_j| / ||eta||_2 = c1 / 2.
  const auto flat = build_prior(v, 2.0, 4, 1.0);
  for (double x : flat.pi) CHECK_THAT(x, WithinRel(0.5, 1e-14));
  CHECK_THROWS_AS(build_prior(v, 2.0, 4, 2.0), InputError);
  CHECK_THROWS_AS(build_prior(ones(100), 2.0, 5, 2.5), InputError);
  CHECK_THROWS_AS(build_prior(ones(100), 2.0, 5, 0.5, 0.0), InputError);
  CHECK_THROWS_AS(build_prior(ones(1), 2.0, 1, 5.0), InputError);
}

TEST_CASE("activation probabilities sum to c1 s / 2", "[lowerbound][property]") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 20 + gen() % 300;
    std::vector<double> vals(d);
    for (auto& x : vals) x = std::pow(10.0, u(gen));
    const auto v = LoadingVector::from_values(vals);
    const int s = 1 + static_cast<int>(gen() % 5);
    const double alpha = (trial % 2) ? 1.0 : 2.0;
    const double c1 = 0.2 + 0.6 * (trial % 3) / 2.0;
    LeastFavorablePrior p;
    try {
      p = build_prior(v, alpha, s, c1);
    } catch (const InputError&) {
      continue;  // some pi_j >= 1 for this loading
    }
    if (p.lambda_o <= 0.0) continue;
    double sum = 0.0;
    for (double x : p.pi) {
      REQUIRE(x >= 0.0);
      REQUIRE(x < 1.0);
      sum += x;
    }
    REQUIRE_THAT(sum, WithinRel(c1 * s / 2.0, 1e-8));
    const auto m = prior_moments(p, v);
    REQUIRE(m.mean_L >= c1 / 4.0 * p.c_alpha2 * (p.lambda_o * s + p.nu) * (1.0 - 1e-12));
    REQUIRE(m.var_L <= p.c_alpha2 * std::max(v[0], p.lambda_o) * m.mean_L * (1.0 + 1e-12));
  }
}

TEST_CASE("sampled support and L match the moments", "[lowerbound]") {
  const auto v = ones(100);
  const auto p = build_prior(v, 2.0, 5, 1.0);
  const auto m = prior_moments(p, v);
  const std::size_t n = 100000;
  const auto st = sample_prior_stats(p, v, n, 2024);
  CHECK(st.n == n);
  CHECK(std::abs(st.mean_support - m.mean_support) <= 3.0 * std::sqrt(m.var_support / n));
  CHECK(std::abs(st.mean_L - m.mean_L) <= 3.0 * std::sqrt(m.var_L / n));
}

TEST_CASE("vanishing activation gives an empty support", "[lowerbound]") {
  const auto v = ones(50);
  auto p = build_prior(v, 2.0, 3, 0.5);
  for (auto& x : p.pi) x = 1e-12;
  const auto st = sample_prior_stats(p, v, 10000, 5);
  CHECK(st.mean_support / 50.0 <= 1e-6);
}

TEST_CASE("sample_prior is deterministic and in original order", "[lowerbound]") {
  const auto v = LoadingVector::from_values({0.1, 2.0, -1.0, 0.5, 0.3, 1.5});
  const auto p = build_prior(v, 2.0, 1, 1.0);
  CHECK(sample_prior(p, v, 7) == sample_prior(p, v, 7));
  std::vector<double> eta_orig{0.1, 2.0, -1.0, 0.5, 0.3, 1.5};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto theta = sample_prior(p, v, seed);
    for (std::size_t j = 0; j < 6; ++j) {
      if (theta[j] == 0.0) continue;
      const std::size_t k = static_cast<std::size_t>(
          std::find(v.order().begin(), v.order().end(), j) - v.order().begin());
      REQUIRE(theta[j] == p.gamma[k]);
      REQUIRE(eta_orig[j] == v[k]);
    }
  }
}

TEST_CASE("parallel prior sampling equals the serial reference", "[lowerbound]") {
  const auto v = ones(400);
  const auto p = build_prior(v, 2.0, 8, 0.5);
  const auto a = sample_prior_stats_serial(p, v, 3000, 99);
  for (int workers : {1, 2, 4}) {
    const auto b = sample_prior_stats(p, v, 3000, 99, workers);
    CHECK(a.mean_support == b.mean_support);
    CHECK(a.mean_L == b.mean_L);
    CHECK(a.separation_frequency == b.separation_frequency);
  }
}

TEST_CASE("separation event at large s", "[lowerbound]") {
  const auto v = ones(10000);
  const auto p = build_prior(v, 2.0, 40, 0.5);
  REQUIRE(p.lambda_o * 40 + p.nu >= 30.0);
  const auto st = sample_prior_stats(p, v, 10000, 8);
  INFO("separation frequency " << st.separation_frequency);
  CHECK(st.separation_frequency >= 0.7);
}

TEST_CASE("chi-square bound is monotone in c1 and vanishes with pi", "[lowerbound][property]") {
  const auto v = ones(200);
  double prev = 0.0;
  for (double c1 : {0.05, 0.1, 0.3, 0.6, 1.0, 1.5}) {
    const double b = chi2_mixture_bound(build_prior(v, 2.0, 3, c1)).bound;
    CHECK(b > prev);
    prev = b;
  }
  auto p = build_prior(v, 2.0, 3, 0.5);
  for (auto& x : p.pi) x = 1e-12;
  const Chi2Bound z = chi2_mixture_bound(p);
  CHECK_THAT(z.bound, WithinAbs(1.0, 1e-15));
  CHECK(z.tv_bound <= 1e-9);
}

TEST_CASE("exact shifted chi-square against the per-coordinate bound", "[lowerbound]") {
  CHECK_THAT(chi2_shift_exact(2.0, 0.5), WithinRel(1.2840254166877415, 1e-8));
  CHECK_THAT(chi2_shift_exact(2.0, 1.0), WithinRel(std::exp(1.0), 1e-8));
  CHECK_THAT(chi2_shift_exact(2.0, 2.0), WithinRel(54.598150033144239, 1e-8));
  CHECK_THAT(chi2_shift_exact(1.0, 0.5), WithinRel(1.4331155659097197, 1e-8));
  CHECK_THAT(chi2_shift_exact(1.0, 1.0), WithinRel(2.7618688347092704, 1e-8));
  CHECK_THAT(chi2_shift_exact(1.0, 2.0), WithinRel(11.280383615464147, 1e-8));
  CHECK_THAT(chi2_shift_exact(1.5, 0.0), WithinRel(1.0, 1e-10));

  // exp(|gamma/C2|^alpha) with C1 = 1 bounds the exact value once C2 is
  // matched to the density scale: C2 = 1 at alpha = 2 (tight) and
  // C2 = sigma_1 at alpha = 1.
  for (double g : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    CHECK(chi2_shift_exact(2.0, g) <= std::exp(g * g) * (1.0 + 1e-8));
    CHECK(chi2_shift_exact(1.0, g) <= std::exp(g / sigma_alpha(1.0)));
  }
}
