#include "sparsefn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsefn/errors.hpp"
#include "sparsefn/rng.hpp"

namespace sparsefn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::oracle: return "oracle";
    case Variant::family: return "family";
    case Variant::adaptive: return "adaptive";
    case Variant::nonsym: return "nonsym";
    case Variant::unknown_sigma: return "unknown-sigma";
    case Variant::collier: return "collier";
    case Variant::plug_in: return "plug-in";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "oracle") return Variant::oracle;
  if (name == "family") return Variant::family;
  if (name == "adaptive") return Variant::adaptive;
  if (name == "nonsym") return Variant::nonsym;
  if (name == "unknown-sigma" || name == "unknown_sigma") return Variant::unknown_sigma;
  if (name == "collier") return Variant::collier;
  if (name == "plug-in" || name == "plug_in") return Variant::plug_in;
  throw InputError("unknown estimator variant '" + name + "'");
}

double default_zeta(double alpha) { return alpha >= 2.0 ? 1000.0 : 1e4; }

double default_c_H(double alpha, double tau) { return tau * std::pow(4.0, 1.0 / alpha); }

namespace {

double known_sigma(const EstimatorOptions& o, Variant v) {
  require(o.sigma.has_value(), "variant '" + to_string(v) + "' needs a known sigma");
  require(*o.sigma >= 0.0 && std::isfinite(*o.sigma), "sigma must be finite and >= 0");
  return *o.sigma;
}

std::size_t block_count(std::size_t d, double gamma_split) {
  require(gamma_split > 0.0 && gamma_split <= 0.5, "gamma_split must lie in (0, 1/2]");
  return static_cast<std::size_t>(std::floor(gamma_split * static_cast<double>(d) * (1.0 + 1e-12)));
}

}  // namespace

EstimatorPlan::EstimatorPlan(Variant variant, const LoadingVector& loading,
                             const EstimatorOptions& options)
    : EstimatorPlan(variant, loading, options, nullptr) {}

EstimatorPlan::EstimatorPlan(Variant variant, const LoadingVector& loading,
                             const EstimatorOptions& options,
                             std::shared_ptr<const AdaptiveRateTable> table)
    : variant_(variant), loading_(&loading), options_(options), table_(std::move(table)) {
  const std::size_t d = loading.dim();
  const int s = options.s;
  require(options.alpha > 0.0 && std::isfinite(options.alpha), "alpha must be positive");
  require(options.tau > 0.0 && std::isfinite(options.tau), "tau must be positive");
  require(options.kappa > 0.0 && std::isfinite(options.kappa), "kappa must be positive");
  require(s >= 1 && static_cast<std::size_t>(s) <= d,
          "s must lie in [1, d] (got s=" + std::to_string(s) + ", d=" + std::to_string(d) + ")");

  const RateProfile oracle = oracle_rate(loading, options.alpha, s);
  lambda_o_ = oracle.lambda_o;
  rate_ = oracle.phi_o;

  auto need_table = [&] {
    if (!table_) table_ = std::make_shared<AdaptiveRateTable>(loading, options.alpha);
    require(table_->alpha() == options.alpha, "adaptive rate table built for a different alpha");
  };
  const double tau = options.tau;
  const double kappa = options.kappa;

  switch (variant) {
    case Variant::oracle: {
      const double sigma = known_sigma(options, variant);
      rule_ = {oracle.j1, kappa * sigma * tau * oracle.lambda_o, true};
      break;
    }
    case Variant::plug_in:
      rule_ = {d, 0.0, true};
      break;
    case Variant::family: {
      const double sigma = known_sigma(options, variant);
      need_table();
      rule_ = {table_->j2(s), kappa * sigma * tau * table_->lambda_star(s), true};
      rate_ = table_->phi_star(s);
      break;
    }
    case Variant::adaptive: {
      const double sigma = known_sigma(options, variant);
      need_table();
      const double zeta = options.zeta.value_or(default_zeta(options.alpha));
      require(zeta > 0.0 && std::isfinite(zeta), "zeta must be positive");
      for (int k = 1; k <= table_->s_max(); ++k) {
        family_rules_.push_back({table_->j2(k), kappa * sigma * tau * table_->lambda_star(k), true});
        omegas_.push_back(std::sqrt(zeta * sigma * sigma * table_->phi_adp(k)));
      }
      rate_ = table_->phi_adp(s);
      break;
    }
    case Variant::nonsym: {
      const double sigma = known_sigma(options, variant);
      const double c_H = options.c_H.value_or(default_c_H(options.alpha, tau));
      require(c_H > 0.0 && std::isfinite(c_H), "c_H must be positive");
      const double level = std::log(M_E * static_cast<double>(d) / s);
      rule_ = {j3_index(d, s, options.alpha), c_H * sigma * std::pow(level, 1.0 / options.alpha),
               false};
      break;
    }
    case Variant::collier: {
      const double sigma = known_sigma(options, variant);
      require(loading.is_all_ones(), "the collier estimator requires homogeneous (all-ones) loadings");
      const double dd = static_cast<double>(d);
      if (s < std::sqrt(dd)) {
        rule_ = {0, sigma * std::sqrt(2.0 * std::log(1.0 + dd / (static_cast<double>(s) * s))),
                 false};
      } else {
        rule_ = {d, 0.0, false};
      }
      break;
    }
    case Variant::unknown_sigma: {
      require(d >= 2, "unknown-sigma estimation needs d >= 2");
      const std::size_t m = block_count(d, options.gamma_split);
      require(m >= 1, "floor(gamma_split * d) must be >= 1");
      if (4.0 * s >= static_cast<double>(m)) {
        warnings_.push_back("s >= floor(gamma_split d)/4: the variance estimate may be contaminated by the signal");
      }
      rule_ = {oracle.j1, 0.0, true};
      break;
    }
  }
}

std::string EstimatorPlan::rate_kind() const {
  if (variant_ == Variant::adaptive) return "phi_adp";
  if (variant_ == Variant::family) return "phi_star";
  return "phi_o";
}

double EstimatorPlan::apply(const Rule& rule, std::span<const double> y,
                            std::vector<std::size_t>* kept) const {
  const auto vals = loading_->values();
  const auto order = loading_->order();
  double sum = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const std::size_t i = order[k];
    const double p = vals[k] * y[i];
    const bool keep = k < rule.cutoff ||
                      (rule.on_product ? std::abs(p) : std::abs(y[i])) > rule.threshold;
    if (keep) {
      sum += p;
      if (kept) kept->push_back(i);
    }
  }
  if (kept) std::sort(kept->begin(), kept->end());
  return sum;
}

EstimatorPlan::Rule EstimatorPlan::unknown_sigma_rule(std::span<const double> y) const {
  const double sigma_hat = std::sqrt(mom_sigma(y, options_.gamma_split, options_.shuffle_seed));
  Rule r = rule_;
  r.threshold = options_.kappa * std::sqrt(2.0) * sigma_hat * options_.tau * lambda_o_;
  return r;
}

int EstimatorPlan::select(std::span<const double> y, std::vector<double>& scratch) const {
  const int s_max = static_cast<int>(family_rules_.size());
  scratch.resize(family_rules_.size());
  for (int k = 0; k < s_max; ++k) scratch[k] = apply(family_rules_[k], y, nullptr);
  const int s_star = table_->s_star();
  for (int s = 1; s <= std::min(s_star, s_max); ++s) {
    bool ok = true;
    for (int t = s + 1; t <= s_max && ok; ++t) {
      ok = std::abs(scratch[s - 1] - scratch[t - 1]) <= omegas_[t - 1];
    }
    if (ok) return s;
  }
  return s_max;
}

double EstimatorPlan::value(std::span<const double> y) const {
  require(y.size() == loading_->dim(), "observation length does not match loading dimension");
  switch (variant_) {
    case Variant::adaptive: {
      std::vector<double> scratch;
      const int s_hat = select(y, scratch);
      return scratch[static_cast<std::size_t>(s_hat - 1)];
    }
    case Variant::unknown_sigma:
      return apply(unknown_sigma_rule(y), y, nullptr);
    default:
      return apply(rule_, y, nullptr);
  }
}

LepskiResult EstimatorPlan::lepski(std::span<const double> y) const {
  require(variant_ == Variant::adaptive, "Lepski selection needs an adaptive plan");
  require(y.size() == loading_->dim(), "observation length does not match loading dimension");
  LepskiResult out;
  out.s_star = table_->s_star();
  out.s0 = table_->s0();
  out.omegas = omegas_;
  out.s_hat = select(y, out.estimates);
  const int s_max = static_cast<int>(family_rules_.size());
  for (int s = 1; s <= std::min(out.s_star, s_max); ++s) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = s + 1; t <= s_max; ++t) {
      worst = std::max(worst, std::abs(out.estimates[s - 1] - out.estimates[t - 1]) - omegas_[t - 1]);
    }
    out.worst_excess.push_back(worst);
  }
  return out;
}

EstimateResult EstimatorPlan::estimate(std::span<const double> y) const {
  require(y.size() == loading_->dim(), "observation length does not match loading dimension");
  for (double v : y) require(std::isfinite(v), "observations must be finite");
  EstimateResult r;
  r.variant = variant_;
  r.warnings = warnings_;
  Rule rule = rule_;
  r.s_used = options_.s;
  if (variant_ == Variant::adaptive) {
    std::vector<double> scratch;
    r.s_used = select(y, scratch);
    rule = family_rules_[static_cast<std::size_t>(r.s_used - 1)];
  } else if (variant_ == Variant::unknown_sigma) {
    rule = unknown_sigma_rule(y);
  }
  r.threshold = rule.threshold;
  r.plug_in_count = rule.cutoff;
  r.value = apply(rule, y, &r.kept_indices);
  return r;
}

namespace {

EstimatorOptions options_from(const EstimationInput& in, int s) {
  EstimatorOptions o;
  o.alpha = in.alpha;
  o.tau = in.tau;
  o.sigma = in.sigma;
  o.kappa = in.kappa;
  o.s = s;
  return o;
}

}  // namespace

EstimateResult oracle_estimate(const EstimationInput& in, int s) {
  return EstimatorPlan(Variant::oracle, in.loading, options_from(in, s)).estimate(in.y);
}

EstimateResult family_estimate(const EstimationInput& in, int s) {
  return EstimatorPlan(Variant::family, in.loading, options_from(in, s)).estimate(in.y);
}

LepskiResult lepski_select(const EstimationInput& in, double zeta) {
  EstimatorOptions o = options_from(in, 1);
  o.zeta = zeta;
  return EstimatorPlan(Variant::adaptive, in.loading, o).lepski(in.y);
}

EstimateResult adaptive_estimate(const EstimationInput& in, double zeta) {
  EstimatorOptions o = options_from(in, 1);
  o.zeta = zeta;
  return EstimatorPlan(Variant::adaptive, in.loading, o).estimate(in.y);
}

EstimateResult nonsymmetric_estimate(const EstimationInput& in, int s, std::optional<double> c_H) {
  EstimatorOptions o = options_from(in, s);
  o.c_H = c_H;
  return EstimatorPlan(Variant::nonsym, in.loading, o).estimate(in.y);
}

EstimateResult collier_estimate(const EstimationInput& in, int s) {
  return EstimatorPlan(Variant::collier, in.loading, options_from(in, s)).estimate(in.y);
}

EstimateResult plug_in_estimate(const EstimationInput& in) {
  return EstimatorPlan(Variant::plug_in, in.loading, options_from(in, 1)).estimate(in.y);
}

EstimateResult unknown_sigma_estimate(const EstimationInput& in, int s, double gamma_split,
                                      std::optional<std::uint64_t> shuffle_seed) {
  EstimatorOptions o = options_from(in, s);
  o.sigma.reset();
  o.gamma_split = gamma_split;
  o.shuffle_seed = shuffle_seed;
  return EstimatorPlan(Variant::unknown_sigma, in.loading, o).estimate(in.y);
}

double mom_sigma(std::span<const double> y, double gamma_split,
                 std::optional<std::uint64_t> shuffle_seed) {
  const std::size_t d = y.size();
  require(d >= 2, "median-of-means variance needs d >= 2");
  const std::size_t m = block_count(d, gamma_split);
  require(m >= 1, "floor(gamma_split * d) must be >= 1");

  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    for (std::size_t i = d - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(idx[i], idx[j]);
    }
  }

  const std::size_t base = d / m;
  const std::size_t extra = d % m;
  std::vector<double> means(m);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    double acc = 0.0;
    for (std::size_t k = 0; k < len; ++k, ++pos) acc += y[idx[pos]] * y[idx[pos]];
    means[b] = acc / static_cast<double>(len);
  }
  const auto mid = means.begin() + static_cast<std::ptrdiff_t>((m - 1) / 2);
  std::nth_element(means.begin(), mid, means.end());
  return *mid;
}

TestResult linear_test(const EstimationInput& in, int s, double t0, double B) {
  require(B > 0.0 && std::isfinite(B), "B must be positive");
  require(std::isfinite(t0), "t0 must be finite");
  const EstimatorPlan plan(Variant::oracle, in.loading, options_from(in, s));
  TestResult r;
  if (s == 1) r.warnings.push_back("the test is calibrated for s >= 2");
  r.statistic = plan.value(in.y);
  r.threshold = B * *in.sigma * std::sqrt(plan.rate());
  r.decision = std::abs(r.statistic - t0) > r.threshold ? 1 : 0;
  return r;
}

}  // namespace sparsefn
