#include "sparsefn/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsefn/errors.hpp"

namespace sparsefn {

std::string to_string(Equation eq) {
  switch (eq) {
    case Equation::oracle: return "oracle";
    case Equation::adaptive: return "adaptive";
    case Equation::asym: return "asym";
  }
  return "unknown";
}

ThresholdObjective::ThresholdObjective(const LoadingVector& loading, double alpha)
    : loading_(&loading), alpha_(alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be a positive finite number");
  const auto logs = loading.log_magnitudes();
  inverse_powers_.resize(logs.size());
  for (std::size_t j = 0; j < logs.size(); ++j) inverse_powers_[j] = std::exp(-alpha * logs[j]);
}

double ThresholdObjective::log_value(double beta) const {
  const auto logs = loading_->log_magnitudes();
  const std::size_t d = logs.size();
  double max1 = -std::numeric_limits<double>::infinity();
  double max2 = max1;
  for (std::size_t j = 0; j < d; ++j) {
    const double w = -beta * inverse_powers_[j];
    max1 = std::max(max1, logs[j] + w);
    max2 = std::max(max2, 2.0 * logs[j] + w);
  }
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double w = -beta * inverse_powers_[j];
    sum1 += std::exp(logs[j] + w - max1);
    sum2 += std::exp(2.0 * logs[j] + w - max2);
  }
  const double lse1 = max1 + std::log(sum1);
  const double lse2 = max2 + std::log(sum2);
  return lse1 - 0.5 * lse2;
}

double ThresholdObjective::operator()(double beta) const { return std::exp(log_value(beta)); }

double phi_objective(const LoadingVector& loading, double alpha, double beta) {
  require(std::isfinite(beta), "beta must be finite");
  return ThresholdObjective(loading, alpha)(beta);
}

double log_phi_objective(const LoadingVector& loading, double alpha, double beta) {
  require(std::isfinite(beta), "beta must be finite");
  return ThresholdObjective(loading, alpha).log_value(beta);
}

namespace {

double tolerance_for(double target, const Tolerances& tol) {
  return tol.rel * std::abs(target) + tol.abs;
}

// Bisection on a decreasing f with f(lo) > 0 > f(hi). Stops once the bracket is
// narrow and the midpoint meets eps, or the bracket cannot shrink further.
template <class F>
double bisect(F&& f, double lo, double hi, double eps, const Tolerances& tol, int& iterations) {
  for (int it = 0; it < tol.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++iterations;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= tol.bracket_width * std::abs(0.5 * (lo + hi)) && std::abs(fm) <= eps) {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ThresholdSolution solve_beta(const ThresholdObjective& objective, double target,
                             const Tolerances& tol, Equation eq) {
  require(target > 0.0 && std::isfinite(target), "target must be positive and finite");
  auto f = [&](double beta) { return objective(beta) - target; };
  const double eps = tolerance_for(target, tol);

  ThresholdSolution sol;
  sol.equation = eq;
  sol.target = target;

  const double f0 = f(0.0);
  if (std::abs(f0) <= eps) {
    sol.beta = 0.0;
    sol.lambda = 0.0;
    sol.residual = f0;
    return sol;
  }

  double lo = 0.0;
  double hi = 0.0;
  int doublings = 0;
  if (f0 > 0.0) {
    double step = 1.0;
    hi = step;
    while (f(hi) > 0.0) {
      if (++doublings > tol.max_doublings) {
        throw NumericalError("solve_beta: no upper bracket within " +
                             std::to_string(tol.max_doublings) + " doublings");
      }
      lo = hi;
      step *= 2.0;
      hi = step;
    }
  } else {
    // On the negative side phi varies on the scale 1/max_j |eta_j|^{-alpha},
    // which can be far below 1 when the loadings decay quickly.
    const double w_max = objective.inverse_powers().back();
    double step = std::min(1.0, 1.0 / w_max);
    lo = -step;
    while (f(lo) < 0.0) {
      if (++doublings > tol.max_doublings) {
        throw NumericalError("solve_beta: no lower bracket within " +
                             std::to_string(tol.max_doublings) + " doublings");
      }
      hi = lo;
      step *= 2.0;
      lo = -step;
    }
  }
  int iterations = doublings;
  const double beta = bisect(f, lo, hi, eps, tol, iterations);
  const double residual = f(beta);
  if (!(std::abs(residual) <= eps)) {
    throw NumericalError("solve_beta: residual " + std::to_string(residual) +
                         " exceeds tolerance after bisection");
  }
  sol.beta = beta;
  sol.lambda = beta > 0.0 ? std::pow(beta, 1.0 / objective.alpha()) : 0.0;
  sol.residual = residual;
  sol.iterations = iterations;
  return sol;
}

ThresholdSolution solve_beta(const LoadingVector& loading, double alpha, double target,
                             const Tolerances& tol) {
  return solve_beta(ThresholdObjective(loading, alpha), target, tol, Equation::oracle);
}

double adaptive_target(double s) { return s / (2.0 * std::sqrt(std::log(M_E * s))); }

ThresholdSolution solve_adaptive_beta(const ThresholdObjective& objective, double s,
                                      const Tolerances& tol) {
  require(s >= 1.0, "adaptive threshold requires s >= 1");
  return solve_beta(objective, adaptive_target(s), tol, Equation::adaptive);
}

ThresholdSolution solve_adaptive_beta(const LoadingVector& loading, double alpha, int s,
                                      const Tolerances& tol) {
  require(s >= 1 && static_cast<std::size_t>(s) <= loading.dim(), "s must lie in [1, d]");
  return solve_adaptive_beta(ThresholdObjective(loading, alpha), static_cast<double>(s), tol);
}

double lambda_h_objective(const LoadingVector& loading, double alpha, int s, double lambda) {
  const auto mags = loading.magnitudes();
  const std::size_t first = static_cast<std::size_t>(s) * static_cast<std::size_t>(s);
  double acc = 0.0;
  for (std::size_t j = first; j <= mags.size(); ++j) {
    acc += std::exp(-std::pow(lambda / mags[j - 1], alpha));
  }
  return acc;
}

ThresholdSolution solve_lambda_H(const LoadingVector& loading, double alpha, int s,
                                 const Tolerances& tol) {
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be a positive finite number");
  require(s >= 1, "s must be >= 1");
  const std::size_t d = loading.dim();
  const std::size_t ss = static_cast<std::size_t>(s);
  require(ss * ss + ss <= d + 1,
          "lambda_H requires s^2 + s <= d + 1 (got s=" + std::to_string(s) +
              ", d=" + std::to_string(d) + ")");
  const double target = static_cast<double>(s);
  auto f = [&](double lambda) { return lambda_h_objective(loading, alpha, s, lambda) - target; };
  const double eps = tolerance_for(target, tol);

  ThresholdSolution sol;
  sol.equation = Equation::asym;
  sol.target = target;
  const double f0 = f(0.0);
  if (std::abs(f0) <= eps) {
    sol.residual = f0;
    return sol;
  }
  double lo = 0.0;
  double hi = loading.magnitudes()[ss * ss - 1];
  int doublings = 0;
  while (f(hi) > 0.0) {
    if (++doublings > tol.max_doublings) {
      throw NumericalError("solve_lambda_H: no upper bracket within " +
                           std::to_string(tol.max_doublings) + " doublings");
    }
    lo = hi;
    hi *= 2.0;
  }
  int iterations = doublings;
  const double lambda = bisect(f, lo, hi, eps, tol, iterations);
  const double residual = f(lambda);
  if (!(std::abs(residual) <= eps)) {
    throw NumericalError("solve_lambda_H: residual " + std::to_string(residual) +
                         " exceeds tolerance after bisection");
  }
  sol.beta = lambda;
  sol.lambda = lambda;
  sol.residual = residual;
  sol.iterations = iterations;
  return sol;
}

}  // namespace sparsefn
