#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "sparsefn/errors.hpp"
#include "sparsefn/rates.hpp"

using namespace sparsefn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LoadingVector ones(std::size_t d) { return LoadingVector::from_values(std::vector<double>(d, 1.0)); }

LoadingVector random_loading(std::mt19937_64& gen, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) x = std::pow(10.0, u(gen));
  return LoadingVector::from_values(v);
}

// Recorded-ratio band for "same order" claims whose constants are unstated.
constexpr double band_lo = 1e-2;
constexpr double band_hi = 1e2;

std::vector<LoadingVector> standard_grid() {
  std::vector<LoadingVector> out;
  for (std::size_t d : {100u, 1000u}) {
    out.push_back(ones(d));
    LoadingSpec tp;
    tp.kind = LoadingKind::two_phase;
    tp.d = d;
    tp.gamma_d = 0.4;
    tp.gamma_lambda = 0.2;
    out.push_back(make_loading(tp));
    LoadingSpec ed;
    ed.kind = LoadingKind::exp_decay;
    ed.d = d;
    ed.c = 2.0 / static_cast<double>(d);
    ed.gamma = 1.0;
    out.push_back(make_loading(ed));
  }
  return out;
}

}  // namespace

TEST_CASE("oracle rate fixtures", "[rates]") {
  const RateProfile plug = oracle_rate(ones(4), 2.0, 4);
  CHECK(plug.lambda_o == 0.0);
  CHECK_THAT(plug.nu, WithinRel(2.0, 1e-14));
  CHECK_THAT(plug.phi_o, WithinRel(4.0, 1e-14));
  CHECK(plug.j1 == 4);
  const RateDecomposition dp = oracle_rate_decomposed(ones(4), 2.0, 4);
  CHECK(dp.lambda_term == 0.0);
  CHECK_THAT(dp.head_energy, WithinRel(4.0, 1e-14));

  const RateProfile r = oracle_rate(ones(100), 2.0, 5);
  CHECK_THAT(r.beta, WithinRel(2.7725887222397812, 1e-9));
  CHECK_THAT(r.lambda_o, WithinRel(1.6651092223153955, 1e-9));
  CHECK_THAT(r.nu, WithinRel(2.5, 1e-9));
  CHECK_THAT(r.phi_o, WithinRel(117.19244861387942, 1e-9));
  CHECK(r.j1 == 0);
  const RateDecomposition dr = oracle_rate_decomposed(ones(100), 2.0, 5);
  CHECK_THAT(dr.lambda_term, WithinRel(25.0 * 2.7725887222397812, 1e-9));
  CHECK(dr.head_energy == 0.0);

  const RateProfile one = oracle_rate(ones(1), 2.0, 1);
  CHECK_THAT(one.beta, WithinRel(1.3862943611198906, 1e-9));
  CHECK_THAT(one.lambda_o, WithinRel(1.1774100225154747, 1e-9));
  CHECK_THAT(one.nu, WithinRel(0.5, 1e-9));
  CHECK_THAT(one.phi_o, WithinRel(2.8137043836353653, 1e-9));

  CHECK_THROWS_AS(oracle_rate(ones(4), 2.0, 5), InputError);
  CHECK_THROWS_AS(oracle_rate(ones(4), 2.0, 0), InputError);
}

TEST_CASE("plug-in cutoff includes ties", "[rates]") {
  const auto v = LoadingVector::from_values({3.0, 2.0, 2.0, 1.0});
  CHECK(plug_in_cutoff(v, 2.0) == 3);
  CHECK(plug_in_cutoff(v, 2.5) == 1);
  CHECK(plug_in_cutoff(v, 5.0) == 0);
  CHECK(plug_in_cutoff(v, 0.0) == 4);
}

TEST_CASE("rate profile invariants on random loadings", "[rates][property]") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 40; ++trial) {
    const auto v = random_loading(gen, 1 + gen() % 150);
    const double alpha = (trial % 2) ? 1.0 : 2.0;
    const int s = 1 + static_cast<int>(gen() % v.dim());
    const RateProfile r = oracle_rate(v, alpha, s);
    REQUIRE_THAT(r.phi_o, WithinRel((r.lambda_o * s + r.nu) * (r.lambda_o * s + r.nu), 1e-14));
    double nu2 = 0.0;
    for (std::size_t j = 0; j < v.dim(); ++j) {
      nu2 += v[j] * v[j] * std::exp(-std::pow(r.lambda_o / std::abs(v[j]), alpha));
    }
    REQUIRE_THAT(r.nu * r.nu, WithinRel(nu2, 1e-12));
    std::size_t j1 = 0;
    for (std::size_t j = 0; j < v.dim(); ++j) if (std::abs(v[j]) >= r.lambda_o) j1 = j + 1;
    REQUIRE(r.j1 == j1);

    const AdaptiveRateTable table(v, alpha);
    const AdaptiveRateProfile a = table.profile(s);
    double e2 = 0.0;
    for (std::size_t j = 0; j < v.dim(); ++j) {
      e2 += v[j] * v[j] * std::exp(-std::pow(a.lambda_star / std::abs(v[j]), alpha));
    }
    const double log_es = std::log(M_E * s);
    if (s <= table.s_max()) {
      REQUIRE_THAT(a.nu_star * a.nu_star, WithinRel(log_es * e2, 1e-12));
      REQUIRE_THAT(a.phi_star,
                   WithinRel(double(s) * s * a.lambda_star * a.lambda_star + a.nu_star * a.nu_star, 1e-12));
    }
  }
}

TEST_CASE("decomposition ratio band", "[rates][property]") {
  std::mt19937_64 gen(43);
  double lo = INFINITY, hi = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto v = random_loading(gen, 2 + gen() % 200);
    const double alpha = 0.5 + 0.5 * (gen() % 4);
    const int s = 1 + static_cast<int>(gen() % v.dim());
    const RateProfile r = oracle_rate(v, alpha, s);
    const RateDecomposition dcmp = oracle_rate_decomposed(v, alpha, s);
    const double ratio = r.phi_o / (dcmp.lambda_term + dcmp.head_energy + r.nu * r.nu);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  INFO("decomposition ratio range [" << lo << ", " << hi << "]");
  CHECK(lo >= 1.0 / 3.0);
  CHECK(hi <= 3.0);
}

TEST_CASE("adaptive rate fixtures", "[rates]") {
  const auto v = ones(100);
  const AdaptiveRateTable table(v, 2.0);
  const RateProfile o1 = oracle_rate(v, 2.0, 1);
  const AdaptiveRateProfile a1 = table.profile(1);
  CHECK(a1.lambda_star == o1.lambda_o);
  CHECK(a1.beta_star == o1.beta);
  CHECK_THAT(a1.nu_star, WithinRel(o1.nu, 1e-14));
  // lambda^2 + nu^2 against (lambda + nu)^2.
  CHECK(table.phi_star(1) <= o1.phi_o);
  CHECK(table.phi_star(1) >= 0.5 * o1.phi_o);
  CHECK(table.s0() == table.s_star() + 1);
  CHECK(table.lambda_star(table.s_star()) > 0.0);
  if (table.s0() <= 100) CHECK(table.lambda_star(table.s0()) == 0.0);
  for (int s = table.s0(); s <= 100; ++s) {
    CHECK(table.phi_adp(s) == table.phi_adp(table.s0()));
    CHECK(table.phi_star(s) == table.phi_star(table.s0()));
  }
  const AdaptiveRateProfile p = adaptive_rate(v, 2.0, 5);
  CHECK_THAT(p.beta_star, WithinRel(3.7317235611606052, 1e-9));
}

TEST_CASE("s_star matches a linear scan", "[rates][property]") {
  std::mt19937_64 gen(47);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_loading(gen, 1 + gen() % 80);
    const double alpha = (trial % 2) ? 1.0 : 2.0;
    const AdaptiveRateTable table(v, alpha);
    int s_star = 0;
    for (int s = 1; s <= static_cast<int>(v.dim()); ++s) {
      if (solve_adaptive_beta(v, alpha, s).lambda > 0.0) s_star = s;
    }
    REQUIRE(table.s_star() == s_star);
  }
}

TEST_CASE("phi_adp alpha branch", "[rates]") {
  const auto v = ones(50);
  const AdaptiveRateTable t1(v, 1.0);
  for (int s = 1; s <= 50; ++s) {
    const double l = std::log(M_E * std::min(s, t1.s0()));
    REQUIRE(t1.phi_adp(s) == std::max(t1.phi_star(s), t1.phi_star(1) * l * l));
  }
  const AdaptiveRateTable t2(v, 2.0);
  for (int s = 1; s <= 50; ++s) REQUIRE(t2.phi_adp(s) == t2.phi_star(s));
}

TEST_CASE("homogeneous adaptive rate versus the closed form", "[rates]") {
  const auto v = ones(10000);
  const AdaptiveRateTable table(v, 2.0);
  ClosedFormParams p;
  p.d = 10000;
  p.alpha = 2.0;
  for (int s : {1, 10, 100}) {
    const double ratio = table.phi_adp(s) / closed_form_rate(ClosedFormKind::homogeneous_adaptive, p, s);
    INFO("s=" << s << " ratio=" << ratio);
    CHECK(ratio >= band_lo);
    CHECK(ratio <= band_hi);
  }
}

TEST_CASE("j3 index fixtures", "[rates]") {
  CHECK(j3_index(100, 10, 2.0) == 100);
  CHECK(j3_index(4, 2, 2.0) == 4);
  CHECK(j3_index(1000, 1, 2.0) ==
        static_cast<std::size_t>(std::ceil(std::log(M_E * 1000.0))));
  CHECK_THROWS_AS(j3_index(4, 5, 2.0), InputError);
}

TEST_CASE("closed-form fixtures", "[rates]") {
  ClosedFormParams p;
  p.d = 100;
  p.alpha = 2.0;
  CHECK_THAT(closed_form_rate(ClosedFormKind::homogeneous_oracle, p, 5),
             WithinRel(25.0 * std::log(5.0), 1e-14));
  ClosedFormParams e;
  e.alpha = 2.0;
  e.j0 = 1.0;
  CHECK_THAT(closed_form_rate(ClosedFormKind::exp_decay_oracle, e, 1), WithinRel(std::log(2.0), 1e-14));
  ClosedFormParams tp;
  tp.d = 1e4;
  tp.alpha = 1.0;
  tp.gamma_d = 0.4;
  tp.gamma_lambda = 0.2;
  const double large_s = 5000.0;
  CHECK(closed_form_two_phase_branch(tp, large_s) ==
        closed_form_rate(ClosedFormKind::homogeneous_oracle, {1e4, 1.0, 0, 0, 0}, large_s));
  CHECK_THROWS_AS(closed_form_kind_from_string("homogenous_oracle"), InputError);
  for (auto k : {ClosedFormKind::homogeneous_oracle, ClosedFormKind::two_phase_adaptive,
                 ClosedFormKind::exp_decay_adaptive}) {
    CHECK(closed_form_kind_from_string(to_string(k)) == k);
  }
}

TEST_CASE("assumption diagnostics", "[rates]") {
  const auto v = ones(10000);
  const int s_cut = static_cast<int>(std::floor(std::pow(1e4, 0.3)));
  const AssumptionDiagnostic a = check_assumption(v, 2.0, s_cut, 1.0);
  INFO("max small ratio " << a.max_small_ratio << ", min large ratio " << a.min_large_ratio);
  CHECK(std::isfinite(a.max_small_ratio));
  CHECK(std::isfinite(a.min_large_ratio));
  CHECK(a.max_small_ratio >= band_lo);
  CHECK(a.max_small_ratio <= band_hi);
  CHECK(a.argmax_small >= 1);
  CHECK(a.argmax_small <= s_cut);

  const AssumptionDiagnostic one = check_assumption(ones(1), 2.0, 1, 1.0);
  // d = 1, s = 1: both ratios are (lambda^2 + nu^2)/(lambda + nu)^2.
  const RateProfile r1 = oracle_rate(ones(1), 2.0, 1);
  const double expected = (r1.lambda_o * r1.lambda_o + r1.nu * r1.nu) / r1.phi_o;
  CHECK_THAT(one.max_small_ratio, WithinRel(expected, 1e-12));
  CHECK_THAT(one.min_large_ratio, WithinRel(expected, 1e-12));

  LoadingSpec ed;
  ed.kind = LoadingKind::exp_decay;
  ed.d = 300;
  ed.c = 1.0;
  const auto e = make_loading(ed);
  const AssumptionDiagnostic de = check_assumption(e, 2.0, 5, 1.0);
  INFO("exp-decay small ratio " << de.max_small_ratio << " s0=" << de.s0);
  CHECK(de.max_small_ratio <= band_hi * std::log(M_E * de.s0));
  CHECK_THROWS_AS(check_assumption(v, 2.0, 10, 2.0), InputError);
}

TEST_CASE("oracle threshold is non-increasing in s", "[rates][property]") {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = random_loading(gen, 100);
    double prev = INFINITY;
    for (int s = 1; s <= 100; ++s) {
      const double l = oracle_rate(v, 1.5, s).lambda_o;
      REQUIRE(l <= prev);
      prev = l;
    }
  }
}

TEST_CASE("almost-monotone constants stay bounded on the standard grid", "[rates][property]") {
  double worst = 0.0;
  for (const auto& v : standard_grid()) {
    for (double alpha : {1.0, 2.0}) {
      const AdaptiveRateTable t(v, alpha);
      const MonotonicityConstants k = almost_monotone_constants(t);
      worst = std::max({worst, k.k_increasing, k.k_decreasing, k.k_adp_increasing});
      REQUIRE(k.k_increasing >= 1.0);
      REQUIRE(k.k_decreasing >= 1.0);
    }
  }
  INFO("worst observed K = " << worst);
  CHECK(worst < 100.0);
}

TEST_CASE("oracle rate dominates the head energy up to j3", "[rates][property]") {
  double c_min = INFINITY;
  for (const auto& v : standard_grid()) {
    const std::size_t d = v.dim();
    for (double alpha : {1.0, 2.0}) {
      for (int s : {1, 3, 10, 30}) {
        const std::size_t j3 = j3_index(d, s, alpha);
        double head = 0.0;
        for (std::size_t j = 0; j < j3; ++j) head += v[j] * v[j];
        const double lhs =
            oracle_rate(v, alpha, s).phi_o * std::pow(std::log(static_cast<double>(d)), 2.0 / alpha);
        c_min = std::min(c_min, lhs / head);
      }
    }
  }
  INFO("recorded constant c = " << c_min);
  CHECK(c_min >= band_lo);
}

TEST_CASE("exp-decay loading behaves like a homogeneous one of size j0", "[rates][property]") {
  for (std::size_t d : {100u, 1000u, 10000u}) {
    LoadingSpec ed;
    ed.kind = LoadingKind::exp_decay;
    ed.d = d;
    ed.c = 2.0 / static_cast<double>(d);
    const auto v = make_loading(ed);
    const std::size_t j0 = effective_dimension(v);
    const auto h = ones(std::min(j0, d));
    for (double alpha : {1.0, 2.0}) {
      for (int s : {1, 3, 10}) {
        const double ratio = oracle_rate(v, alpha, s).phi_o / oracle_rate(h, alpha, s).phi_o;
        INFO("d=" << d << " alpha=" << alpha << " s=" << s << " ratio=" << ratio);
        CHECK(ratio >= band_lo);
        CHECK(ratio <= band_hi);
      }
    }
  }
}
