#include "sparsefn/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sparsefn/errors.hpp"

namespace sparsefn {

namespace {

void require_s_in_range(const LoadingVector& loading, int s) {
  require(s >= 1 && static_cast<std::size_t>(s) <= loading.dim(),
          "s must lie in [1, d] (got s=" + std::to_string(s) +
              ", d=" + std::to_string(loading.dim()) + ")");
}

double log_weighted_energy(const LoadingVector& loading, double alpha, double lambda) {
  const auto logs = loading.log_magnitudes();
  const double log_lambda = lambda > 0.0 ? std::log(lambda) : -std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(logs.size());
  for (std::size_t j = 0; j < logs.size(); ++j) {
    const double decay = lambda > 0.0 ? std::exp(alpha * (log_lambda - logs[j])) : 0.0;
    terms[j] = 2.0 * logs[j] - decay;
    mx = std::max(mx, terms[j]);
  }
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  return mx + std::log(acc);
}

}  // namespace

double weighted_energy(const LoadingVector& loading, double alpha, double lambda) {
  return std::exp(log_weighted_energy(loading, alpha, lambda));
}

std::size_t plug_in_cutoff(const LoadingVector& loading, double lambda) {
  const auto mags = loading.magnitudes();
  const auto it = std::partition_point(mags.begin(), mags.end(),
                                       [lambda](double m) { return m >= lambda; });
  return static_cast<std::size_t>(it - mags.begin());
}

RateProfile oracle_rate(const LoadingVector& loading, double alpha, int s,
                        const Tolerances& tol) {
  require_s_in_range(loading, s);
  const ThresholdObjective objective(loading, alpha);
  const ThresholdSolution sol = solve_beta(objective, 0.5 * s, tol, Equation::oracle);
  RateProfile r;
  r.s = s;
  r.alpha = alpha;
  r.beta = sol.beta;
  r.lambda_o = sol.lambda;
  r.nu = std::exp(0.5 * log_weighted_energy(loading, alpha, r.lambda_o));
  r.j1 = plug_in_cutoff(loading, r.lambda_o);
  const double root = r.lambda_o * s + r.nu;
  r.phi_o = root * root;
  return r;
}

RateDecomposition oracle_rate_decomposed(const LoadingVector& loading, double alpha, int s,
                                         const Tolerances& tol) {
  const RateProfile r = oracle_rate(loading, alpha, s, tol);
  RateDecomposition out;
  out.lambda_term = r.lambda_o * r.lambda_o * static_cast<double>(s) * s;
  const auto vals = loading.values();
  for (std::size_t j = 0; j < r.j1; ++j) out.head_energy += vals[j] * vals[j];
  return out;
}

AdaptiveRateTable::Entry AdaptiveRateTable::compute(const ThresholdObjective& objective,
                                                    double s, const Tolerances& tol) const {
  const ThresholdSolution sol = solve_adaptive_beta(objective, s, tol);
  Entry e;
  e.beta_star = sol.beta;
  e.lambda_star = sol.lambda;
  e.j2 = plug_in_cutoff(*loading_, e.lambda_star);
  const double log_es = std::log(M_E * s);
  const double nu2 = log_es * weighted_energy(*loading_, alpha_, e.lambda_star);
  e.nu_star = std::sqrt(nu2);
  e.phi_star = s * s * e.lambda_star * e.lambda_star + nu2;
  return e;
}

AdaptiveRateTable::AdaptiveRateTable(const LoadingVector& loading, double alpha,
                                     const Tolerances& tol)
    : loading_(&loading), alpha_(alpha) {
  const ThresholdObjective objective(loading, alpha);
  const int d = static_cast<int>(loading.dim());

  std::map<int, bool> positive;
  auto lambda_positive = [&](int s) {
    auto it = positive.find(s);
    if (it != positive.end()) return it->second;
    const bool p = solve_adaptive_beta(objective, static_cast<double>(s), tol).lambda > 0.0;
    positive.emplace(s, p);
    return p;
  };
  if (!lambda_positive(1)) {
    s_star_ = 0;
  } else if (lambda_positive(d)) {
    s_star_ = d;
  } else {
    int lo = 1;  // positive
    int hi = d;  // not positive
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (lambda_positive(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    s_star_ = lo;
  }
  s0_ = s_star_ + 1;

  const int s_max = std::min(s0_, d);
  entries_.resize(static_cast<std::size_t>(s_max));
  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int s = 1; s <= s_max; ++s) {
    try {
      entries_[static_cast<std::size_t>(s - 1)] = compute(objective, static_cast<double>(s), tol);
    } catch (const std::exception& e) {
#pragma omp critical(sparsefn_rate_table_failure)
      {
        failed = true;
        failure = e.what();
      }
    }
  }
  if (failed) throw NumericalError("adaptive rate table: " + failure);
}

const AdaptiveRateTable::Entry& AdaptiveRateTable::entry(int s) const {
  require(s >= 1, "s must be >= 1");
  const int k = std::min(s, s_max());
  return entries_[static_cast<std::size_t>(k - 1)];
}

double AdaptiveRateTable::phi_adp(int s) const {
  const double base = phi_star(s);
  if (alpha_ < 2.0) {
    const double l = std::log(M_E * std::min(s, s0_));
    return std::max(base, phi_star(1) * l * l);
  }
  return base;
}

AdaptiveRateProfile AdaptiveRateTable::profile(int s) const {
  const Entry& e = entry(s);
  AdaptiveRateProfile p;
  p.s = s;
  p.beta_star = e.beta_star;
  p.lambda_star = e.lambda_star;
  p.nu_star = e.nu_star;
  p.j2 = e.j2;
  p.s_star = s_star_;
  p.s0 = s0_;
  p.phi_star = e.phi_star;
  p.phi_adp = phi_adp(s);
  return p;
}

AdaptiveRateProfile adaptive_rate(const LoadingVector& loading, double alpha, int s,
                                  const Tolerances& tol) {
  require_s_in_range(loading, s);
  return AdaptiveRateTable(loading, alpha, tol).profile(s);
}

std::size_t j3_index(std::size_t d, int s, double alpha) {
  require(s >= 1 && static_cast<std::size_t>(s) <= d, "j3 requires 1 <= s <= d");
  require(alpha > 0.0, "alpha must be positive");
  const double ds = static_cast<double>(d);
  const double v = static_cast<double>(s) * s * std::pow(std::log(M_E * ds / s), 2.0 / alpha);
  const double c = std::ceil(v);
  if (c >= ds) return d;
  return static_cast<std::size_t>(c);
}

ClosedFormKind closed_form_kind_from_string(const std::string& name) {
  if (name == "homogeneous_oracle") return ClosedFormKind::homogeneous_oracle;
  if (name == "homogeneous_adaptive") return ClosedFormKind::homogeneous_adaptive;
  if (name == "two_phase_oracle") return ClosedFormKind::two_phase_oracle;
  if (name == "two_phase_adaptive") return ClosedFormKind::two_phase_adaptive;
  if (name == "exp_decay_oracle") return ClosedFormKind::exp_decay_oracle;
  if (name == "exp_decay_adaptive") return ClosedFormKind::exp_decay_adaptive;
  throw InputError("unknown closed-form kind '" + name + "'");
}

std::string to_string(ClosedFormKind kind) {
  switch (kind) {
    case ClosedFormKind::homogeneous_oracle: return "homogeneous_oracle";
    case ClosedFormKind::homogeneous_adaptive: return "homogeneous_adaptive";
    case ClosedFormKind::two_phase_oracle: return "two_phase_oracle";
    case ClosedFormKind::two_phase_adaptive: return "two_phase_adaptive";
    case ClosedFormKind::exp_decay_oracle: return "exp_decay_oracle";
    case ClosedFormKind::exp_decay_adaptive: return "exp_decay_adaptive";
  }
  return "unknown";
}

namespace {

// s^2 log^{2/a}(1 + dim^{a/2} boost^{a/2} / s^a)
double homogeneous_form(double dim, double a, double s, double boost = 1.0) {
  const double inner = 1.0 + std::pow(dim, a / 2.0) * std::pow(boost, a / 2.0) / std::pow(s, a);
  return s * s * std::pow(std::log(inner), 2.0 / a);
}

}  // namespace

double closed_form_rate(ClosedFormKind kind, const ClosedFormParams& p, double s) {
  require(s > 0.0, "s must be positive");
  require(p.alpha > 0.0, "alpha must be positive");
  const double a = p.alpha;
  const double log_es = std::log(M_E * s);
  switch (kind) {
    case ClosedFormKind::homogeneous_oracle:
      require(p.d >= 1.0, "d must be >= 1");
      return homogeneous_form(p.d, a, s);
    case ClosedFormKind::homogeneous_adaptive:
      require(p.d >= 1.0, "d must be >= 1");
      return homogeneous_form(p.d, a, s, log_es);
    case ClosedFormKind::two_phase_oracle: {
      require(p.d >= 1.0 && p.gamma_d > 0.0 && p.gamma_lambda > 0.0,
              "two-phase closed form needs d, gamma_d, gamma_lambda");
      const double block = std::pow(p.d, 2.0 * p.gamma_lambda) *
                           homogeneous_form(std::pow(p.d, p.gamma_d), a, s);
      return block + homogeneous_form(p.d, a, s);
    }
    case ClosedFormKind::two_phase_adaptive: {
      require(p.d >= 1.0 && p.gamma_d > 0.0 && p.gamma_lambda > 0.0,
              "two-phase closed form needs d, gamma_d, gamma_lambda");
      const double block = std::pow(p.d, 2.0 * p.gamma_lambda) *
                           homogeneous_form(std::pow(p.d, p.gamma_d), a, s, log_es);
      return block + homogeneous_form(p.d, a, s, log_es);
    }
    case ClosedFormKind::exp_decay_oracle:
      require(p.j0 >= 1.0, "j0 must be >= 1");
      return s * s * std::pow(std::log(1.0 + p.j0 / (s * s)), 2.0 / a);
    case ClosedFormKind::exp_decay_adaptive: {
      require(p.j0 >= 1.0, "j0 must be >= 1");
      const double knee = std::sqrt(p.j0 * std::log(M_E * p.j0));
      if (s <= knee) return s * s * std::pow(std::log(1.0 + p.j0 * log_es / (s * s)), 2.0 / a);
      return p.j0 * std::log(M_E * p.j0);
    }
  }
  throw InputError("unknown closed-form kind");
}

double closed_form_two_phase_branch(const ClosedFormParams& p, double s) {
  require(p.d > 1.0 && p.gamma_d > 0.0 && p.gamma_lambda > 0.0,
          "two-phase closed form needs d > 1, gamma_d, gamma_lambda");
  const double a = p.alpha;
  const double breakpoint =
      std::pow(p.d, p.gamma_lambda + p.gamma_d / 2.0) / std::pow(std::log(p.d), 1.0 / a);
  if (s <= breakpoint) {
    return std::pow(p.d, 2.0 * p.gamma_lambda) * homogeneous_form(std::pow(p.d, p.gamma_d), a, s);
  }
  return homogeneous_form(p.d, a, s);
}

AssumptionDiagnostic check_assumption(const LoadingVector& loading, double alpha, int s_cut,
                                      double gamma0, const Tolerances& tol) {
  require_s_in_range(loading, s_cut);
  require(gamma0 > 0.0 && gamma0 < 2.0, "gamma0 must lie in (0, 2)");
  const AdaptiveRateTable table(loading, alpha, tol);
  const int d = static_cast<int>(loading.dim());

  std::vector<double> phi_o(static_cast<std::size_t>(s_cut));
#pragma omp parallel for schedule(dynamic)
  for (int s = 1; s <= s_cut; ++s) {
    phi_o[static_cast<std::size_t>(s - 1)] = oracle_rate(loading, alpha, s, tol).phi_o;
  }

  AssumptionDiagnostic out;
  out.s_cut = s_cut;
  out.gamma0 = gamma0;
  out.s0 = table.s0();
  out.max_small_ratio = -std::numeric_limits<double>::infinity();
  for (int s = 1; s <= s_cut; ++s) {
    const double r = table.phi_adp(s) / phi_o[static_cast<std::size_t>(s - 1)];
    if (r > out.max_small_ratio) {
      out.max_small_ratio = r;
      out.argmax_small = s;
    }
  }
  const double phi_o1 = phi_o[0];
  out.min_large_ratio = std::numeric_limits<double>::infinity();
  const int last = std::max(s_cut, std::min(d, table.s0()));
  for (int s = s_cut; s <= last; ++s) {
    const double cap = static_cast<double>(std::min(s, table.s0()));
    const double r = table.phi_adp(s) / (phi_o1 * std::pow(cap, gamma0));
    if (r < out.min_large_ratio) {
      out.min_large_ratio = r;
      out.argmin_large = s;
    }
  }
  return out;
}

MonotonicityConstants almost_monotone_constants(const AdaptiveRateTable& table) {
  MonotonicityConstants k;
  double prefix_max_inc = 0.0;
  double prefix_min_dec = std::numeric_limits<double>::infinity();
  double prefix_max_adp = 0.0;
  for (int s = 1; s <= table.s_max(); ++s) {
    const double log_es = std::log(M_E * s);
    const double inc = table.phi_star(s) / log_es;
    const double dec = table.phi_star(s) / (static_cast<double>(s) * s * log_es);
    const double adp = table.phi_adp(s);
    prefix_max_inc = std::max(prefix_max_inc, inc);
    prefix_min_dec = std::min(prefix_min_dec, dec);
    prefix_max_adp = std::max(prefix_max_adp, adp);
    k.k_increasing = std::max(k.k_increasing, prefix_max_inc / inc);
    k.k_decreasing = std::max(k.k_decreasing, dec / prefix_min_dec);
    k.k_adp_increasing = std::max(k.k_adp_increasing, prefix_max_adp / adp);
  }
  return k;
}

}  // namespace sparsefn
