#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsefn/loading.hpp"
#include "sparsefn/rates.hpp"

namespace sparsefn {

enum class Variant { oracle, family, adaptive, nonsym, unknown_sigma, collier, plug_in };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// Observations y are in the loading's original coordinate order.
struct EstimationInput {
  std::span<const double> y;
  const LoadingVector& loading;
  double alpha = 2.0;
  double tau = 2.0;
  std::optional<double> sigma;  // empty means unknown
  double kappa = 1.0;
};

struct EstimateResult {
  Variant variant = Variant::oracle;
  double value = 0.0;
  int s_used = 0;
  double threshold = 0.0;
  std::size_t plug_in_count = 0;  // coordinates kept unconditionally
  std::vector<std::size_t> kept_indices;  // 0-based, original order, ascending
  std::vector<std::string> warnings;
};

/// Tuning knobs shared by every variant. Fields a variant does not use are ignored.
struct EstimatorOptions {
  double alpha = 2.0;
  double tau = 2.0;
  std::optional<double> sigma;
  double kappa = 1.0;
  int s = 1;
  std::optional<double> zeta;  // default 1000 for alpha >= 2, 1e4 otherwise
  double gamma_split = 0.5;
  std::optional<double> c_H;   // default tau 4^{1/alpha}
  std::optional<std::uint64_t> shuffle_seed;
};

double default_zeta(double alpha);
double default_c_H(double alpha, double tau);

struct LepskiResult {
  int s_hat = 1;
  int s_star = 0;
  int s0 = 1;
  std::vector<double> estimates;  // L*_s for s = 1..min(s0, d)
  std::vector<double> omegas;     // omega_s for the same range
  /// For each candidate s in [1, s_star]: max over s' in (s, min(s0,d)] of
  /// |L*_s - L*_s'| - omega_s' (-inf when the range is empty). s qualifies
  /// iff the entry is <= 0.
  std::vector<double> worst_excess;
};

/// Thresholds, cutoffs and Lepski bands precomputed for a fixed loading and
/// options, so an estimator can be applied to many observation vectors.
/// Immutable after construction and safe to share between threads.
class EstimatorPlan {
 public:
  EstimatorPlan(Variant variant, const LoadingVector& loading, const EstimatorOptions& options);
  /// Reuses an existing adaptive rate table (must belong to the same loading and alpha).
  EstimatorPlan(Variant variant, const LoadingVector& loading, const EstimatorOptions& options,
                std::shared_ptr<const AdaptiveRateTable> table);

  Variant variant() const { return variant_; }
  /// Point estimate only; no allocation beyond the Lepski scratch.
  double value(std::span<const double> y) const;
  EstimateResult estimate(std::span<const double> y) const;
  LepskiResult lepski(std::span<const double> y) const;

  const AdaptiveRateTable* table() const { return table_.get(); }
  /// Rate denominator matching the variant: Phi_adp(s) for adaptive,
  /// Phi_*(s) for the fixed-s family member, Phi_o(s) otherwise.
  double rate() const { return rate_; }
  std::string rate_kind() const;

 private:
  struct Rule {
    std::size_t cutoff = 0;   // sorted positions < cutoff are kept unconditionally
    double threshold = 0.0;
    bool on_product = true;   // compare |eta_j y_j| (true) or |y_j| (false)
  };
  double apply(const Rule& rule, std::span<const double> y,
               std::vector<std::size_t>* kept) const;
  int select(std::span<const double> y, std::vector<double>& scratch) const;
  Rule unknown_sigma_rule(std::span<const double> y) const;

  Variant variant_;
  const LoadingVector* loading_;
  EstimatorOptions options_;
  std::shared_ptr<const AdaptiveRateTable> table_;
  Rule rule_;
  std::vector<Rule> family_rules_;  // s = 1..min(s0, d)
  std::vector<double> omegas_;
  double lambda_o_ = 0.0;
  double rate_ = 0.0;
  std::vector<std::string> warnings_;
};

EstimateResult oracle_estimate(const EstimationInput& in, int s);
EstimateResult family_estimate(const EstimationInput& in, int s);
LepskiResult lepski_select(const EstimationInput& in, double zeta);
EstimateResult adaptive_estimate(const EstimationInput& in, double zeta);
EstimateResult nonsymmetric_estimate(const EstimationInput& in, int s,
                                     std::optional<double> c_H = std::nullopt);
EstimateResult collier_estimate(const EstimationInput& in, int s);
EstimateResult plug_in_estimate(const EstimationInput& in);
EstimateResult unknown_sigma_estimate(const EstimationInput& in, int s, double gamma_split,
                                      std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Median of m = floor(gamma d) contiguous block means of y_j^2 (the first
/// d mod m blocks hold one extra element; even m takes the lower middle).
/// With a shuffle seed the coordinates are permuted first.
double mom_sigma(std::span<const double> y, double gamma_split,
                 std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct TestResult {
  int decision = 0;
  double statistic = 0.0;  // the oracle estimate
  double threshold = 0.0;  // B sigma sqrt(Phi_o)
  std::vector<std::string> warnings;
};

TestResult linear_test(const EstimationInput& in, int s, double t0, double B);

}  // namespace sparsefn
