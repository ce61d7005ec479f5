#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sparsefn/loading.hpp"
#include "sparsefn/threshold.hpp"

namespace sparsefn {

/// Known-sparsity rate quantities for one (loading, alpha, s).
struct RateProfile {
  int s = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double lambda_o = 0.0;
  double nu = 0.0;
  std::size_t j1 = 0;  // number of plug-in coordinates
  double phi_o = 0.0;  // (lambda_o s + nu)^2
};

/// sum_j eta_j^2 exp(-(lambda/|eta_j|)^alpha), in the log domain.
double weighted_energy(const LoadingVector& loading, double alpha, double lambda);

/// max{j : |eta_j| >= lambda} (0 if none); lambda = 0 gives d.
std::size_t plug_in_cutoff(const LoadingVector& loading, double lambda);

RateProfile oracle_rate(const LoadingVector& loading, double alpha, int s,
                        const Tolerances& tol = {});

struct RateDecomposition {
  double lambda_term = 0.0;  // lambda_o^2 s^2
  double head_energy = 0.0;  // sum_{j <= j1} eta_j^2
};

RateDecomposition oracle_rate_decomposed(const LoadingVector& loading, double alpha, int s,
                                         const Tolerances& tol = {});

struct AdaptiveRateProfile {
  int s = 0;
  double beta_star = 0.0;
  double lambda_star = 0.0;
  double nu_star = 0.0;
  std::size_t j2 = 0;
  int s_star = 0;
  int s0 = 1;
  double phi_star = 0.0;
  double phi_adp = 0.0;
};

/// Adaptive quantities for every s in [1, min(s0, d)], computed eagerly.
///
/// s_star = max{s in [d] : lambda_*(s) > 0} is located by binary search
/// (lambda_* is non-increasing in s). Phi_* and Phi_adp are constant for
/// s > s0, so the table stops there. Solves for different s run in
/// parallel; the table is read-only afterwards.
class AdaptiveRateTable {
 public:
  AdaptiveRateTable(const LoadingVector& loading, double alpha, const Tolerances& tol = {});

  int s_star() const { return s_star_; }
  int s0() const { return s0_; }
  /// Largest s with its own entry, min(s0, d).
  int s_max() const { return static_cast<int>(entries_.size()); }
  double alpha() const { return alpha_; }

  double lambda_star(int s) const { return entry(s).lambda_star; }
  std::size_t j2(int s) const { return entry(s).j2; }
  double phi_star(int s) const { return entry(s).phi_star; }
  double phi_adp(int s) const;
  AdaptiveRateProfile profile(int s) const;

 private:
  struct Entry {
    double beta_star = 0.0;
    double lambda_star = 0.0;
    double nu_star = 0.0;
    std::size_t j2 = 0;
    double phi_star = 0.0;
  };
  const Entry& entry(int s) const;
  Entry compute(const ThresholdObjective& objective, double s, const Tolerances& tol) const;

  const LoadingVector* loading_;
  double alpha_;
  int s_star_ = 0;
  int s0_ = 1;
  std::vector<Entry> entries_;
};

AdaptiveRateProfile adaptive_rate(const LoadingVector& loading, double alpha, int s,
                                  const Tolerances& tol = {});

/// ceil(s^2 log^{2/alpha}(e d / s)) capped at d.
std::size_t j3_index(std::size_t d, int s, double alpha);

enum class ClosedFormKind {
  homogeneous_oracle,
  homogeneous_adaptive,
  two_phase_oracle,
  two_phase_adaptive,
  exp_decay_oracle,
  exp_decay_adaptive,
};

ClosedFormKind closed_form_kind_from_string(const std::string& name);
std::string to_string(ClosedFormKind kind);

struct ClosedFormParams {
  double d = 0.0;
  double alpha = 2.0;
  double gamma_d = 0.0;       // two-phase
  double gamma_lambda = 0.0;  // two-phase
  double j0 = 0.0;            // exp-decay effective dimension
};

/// Closed-form rate orders for the worked loading families, up to constants.
/// The two-phase oracle form is the sum of the small-loading block term
/// d^{2 g_l} s^2 log^{2/a}(1 + d^{g_d a/2}/s^a) and the homogeneous-in-d term.
double closed_form_rate(ClosedFormKind kind, const ClosedFormParams& params, double s);

/// The two-phase oracle rate as a two-branch piecewise function with
/// breakpoint d^{g_l + g_d/2} / log^{1/a}(d).
double closed_form_two_phase_branch(const ClosedFormParams& params, double s);

struct AssumptionDiagnostic {
  int s_cut = 0;
  double gamma0 = 0.0;
  double max_small_ratio = 0.0;  // max_{s <= s_cut} Phi_adp(s)/Phi_o(s)
  int argmax_small = 0;
  double min_large_ratio = 0.0;  // min_{s >= s_cut} Phi_adp(s)/(Phi_o(1) (s ^ s0)^gamma0)
  int argmin_large = 0;
  int s0 = 0;
};

AssumptionDiagnostic check_assumption(const LoadingVector& loading, double alpha, int s_cut,
                                      double gamma0, const Tolerances& tol = {});

/// Worst observed constants in the two "almost monotone" relations for
/// 1 <= s <= s' <= min(s0, d):
///   increasing: Phi_*(s)/log(es) <= K Phi_*(s')/log(es')
///   decreasing: Phi_*(s')/(s'^2 log(es')) <= K Phi_*(s)/(s^2 log(es))
struct MonotonicityConstants {
  double k_increasing = 0.0;
  double k_decreasing = 0.0;
  double k_adp_increasing = 0.0;  // Phi_adp(s) <= K Phi_adp(s')
};

MonotonicityConstants almost_monotone_constants(const AdaptiveRateTable& table);

}  // namespace sparsefn
