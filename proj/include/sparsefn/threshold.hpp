#pragma once

#include <string>
#include <vector>

#include "sparsefn/loading.hpp"

namespace sparsefn {

struct Tolerances {
  double rel = 1e-10;          // on the objective, relative to the target
  double abs = 0.0;            // on the objective
  double bracket_width = 1e-12;  // relative bracket width that stops bisection
  int max_iterations = 200;    // bisection steps
  int max_doublings = 120;     // bracket expansion steps
};

enum class Equation { oracle, adaptive, asym };

std::string to_string(Equation eq);

struct ThresholdSolution {
  Equation equation = Equation::oracle;
  double target = 0.0;
  double beta = 0.0;    // root; for asym this is lambda_H itself
  double lambda = 0.0;  // max(beta, 0)^(1/alpha) for oracle/adaptive
  double residual = 0.0;
  int iterations = 0;
};

/// The threshold-equation left-hand side for a fixed (loading, alpha):
///
///   phi(beta) = sum_j |eta_j| e^{-beta/|eta_j|^alpha}
///               / sqrt(sum_j eta_j^2 e^{-beta/|eta_j|^alpha})
///
/// evaluated with log-sum-exp so it stays finite for extreme beta and
/// loadings spread over many orders of magnitude. phi is strictly decreasing.
class ThresholdObjective {
 public:
  ThresholdObjective(const LoadingVector& loading, double alpha);

  double operator()(double beta) const;
  /// log phi(beta). Finite for every finite beta, whereas phi itself
  /// overflows once beta is very negative (phi grows like
  /// exp(-beta / (2 |eta_d|^alpha))).
  double log_value(double beta) const;
  double alpha() const { return alpha_; }
  const LoadingVector& loading() const { return *loading_; }
  /// |eta_j|^{-alpha}, sorted order.
  const std::vector<double>& inverse_powers() const { return inverse_powers_; }

 private:
  const LoadingVector* loading_;
  double alpha_;
  std::vector<double> inverse_powers_;
};

double phi_objective(const LoadingVector& loading, double alpha, double beta);
double log_phi_objective(const LoadingVector& loading, double alpha, double beta);

/// Unique beta with phi(beta) = target, by bracket doubling from 0 and bisection.
/// Throws NumericalError if no bracket is found within tol.max_doublings.
ThresholdSolution solve_beta(const ThresholdObjective& objective, double target,
                             const Tolerances& tol = {}, Equation eq = Equation::oracle);
ThresholdSolution solve_beta(const LoadingVector& loading, double alpha, double target,
                             const Tolerances& tol = {});

/// s / (2 sqrt(log(e s))); the right-hand side of the adaptive equation.
double adaptive_target(double s);

ThresholdSolution solve_adaptive_beta(const ThresholdObjective& objective, double s,
                                      const Tolerances& tol = {});
ThresholdSolution solve_adaptive_beta(const LoadingVector& loading, double alpha, int s,
                                      const Tolerances& tol = {});

/// sum_{j = s^2}^{d} exp(-(lambda/|eta_j|)^alpha), 1-based j.
double lambda_h_objective(const LoadingVector& loading, double alpha, int s, double lambda);

/// Unique lambda >= 0 with lambda_h_objective(lambda) = s. Requires s^2 + s <= d + 1.
ThresholdSolution solve_lambda_H(const LoadingVector& loading, double alpha, int s,
                                 const Tolerances& tol = {});

}  // namespace sparsefn
