#include "sparsefn/noise.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "sparsefn/errors.hpp"

namespace sparsefn {

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::symm_weibull: return "symm_weibull";
    case NoiseFamily::rademacher: return "rademacher";
    case NoiseFamily::uniform_sym: return "uniform_sym";
    case NoiseFamily::shifted_exponential: return "shifted_exponential";
  }
  return "unknown";
}

std::string to_string(NoiseClass cls) { return cls == NoiseClass::G ? "G" : "H"; }

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "symm_weibull") return NoiseFamily::symm_weibull;
  if (name == "rademacher") return NoiseFamily::rademacher;
  if (name == "uniform_sym") return NoiseFamily::uniform_sym;
  if (name == "shifted_exponential") return NoiseFamily::shifted_exponential;
  throw InputError("unknown noise family '" + name + "'");
}

NoiseClass noise_class_from_string(const std::string& name) {
  if (name == "G") return NoiseClass::G;
  if (name == "H") return NoiseClass::H;
  throw InputError("unknown noise class '" + name + "' (expected G or H)");
}

NoiseModel NoiseModel::make(NoiseFamily family, double alpha, double tau, NoiseClass cls) {
  require(alpha > 0.0 && std::isfinite(alpha), "noise alpha must be positive and finite");
  require(tau > 0.0 && std::isfinite(tau), "noise tau must be positive and finite");
  NoiseModel m{family, alpha, tau, cls};
  require(cls == NoiseClass::H || m.symmetric(),
          to_string(family) + " is not symmetric and can only be declared class H");
  return m;
}

double sigma_alpha(double alpha) {
  require(alpha > 0.0, "alpha must be positive");
  return std::exp(0.5 * (std::lgamma(1.0 / alpha) - std::lgamma(3.0 / alpha)));
}

double minimal_tau(double alpha) {
  return sigma_alpha(alpha) * std::pow(1.0 - std::pow(2.0, -alpha), -1.0 / alpha);
}

double draw(const NoiseModel& model, Rng& rng) {
  switch (model.family) {
    case NoiseFamily::gaussian:
      return rng.normal();
    case NoiseFamily::symm_weibull: {
      const double s = rng.sign();
      const double log_g = rng.log_gamma_variate(1.0 / model.alpha);
      return s * sigma_alpha(model.alpha) * std::exp(log_g / model.alpha);
    }
    case NoiseFamily::rademacher:
      return rng.sign();
    case NoiseFamily::uniform_sym:
      return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case NoiseFamily::shifted_exponential:
      return rng.exponential() - 1.0;
  }
  return 0.0;
}

void sample_into(const NoiseModel& model, Rng& rng, std::span<double> out) {
  if (model.family == NoiseFamily::symm_weibull) {
    const double scale = sigma_alpha(model.alpha);
    const double shape = 1.0 / model.alpha;
    for (double& x : out) {
      const double s = rng.sign();
      x = s * scale * std::exp(rng.log_gamma_variate(shape) / model.alpha);
    }
    return;
  }
  for (double& x : out) x = draw(model, rng);
}

std::vector<double> sample(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  Rng rng(seed);
  sample_into(model, rng, out);
  return out;
}

double tail_bound(const NoiseModel& model, double t) {
  const double k = model.noise_class == NoiseClass::G ? 2.0 : 1.0;
  return 2.0 * std::exp(-k * std::pow(t / model.tau, model.alpha));
}

double exact_tail(const NoiseModel& model, double t) {
  if (t <= 0.0) return 1.0;
  switch (model.family) {
    case NoiseFamily::gaussian:
      return std::erfc(t / std::sqrt(2.0));
    case NoiseFamily::symm_weibull: {
      const double a = model.alpha;
      return boost::math::gamma_q(1.0 / a, std::pow(t / sigma_alpha(a), a));
    }
    case NoiseFamily::rademacher:
      return t <= 1.0 ? 1.0 : 0.0;
    case NoiseFamily::uniform_sym:
      return std::max(0.0, 1.0 - t / std::sqrt(3.0));
    case NoiseFamily::shifted_exponential: {
      const double upper = std::exp(-(1.0 + t));
      const double lower = t < 1.0 ? -std::expm1(-(1.0 - t)) : 0.0;
      return upper + lower;
    }
  }
  return 1.0;
}

TailCheckReport tail_check(const NoiseModel& model, std::span<const double> t_grid, std::size_t n,
                           std::uint64_t seed) {
  require(n >= 1, "tail_check needs n >= 1");
  for (double t : t_grid) require(t > 0.0, "tail_check grid must be positive");
  const std::vector<double> xs = sample(model, n, seed);
  TailCheckReport report;
  for (double t : t_grid) {
    const auto hits = std::count_if(xs.begin(), xs.end(), [t](double x) { return std::abs(x) >= t; });
    TailCheckRow row;
    row.t = t;
    row.empirical = static_cast<double>(hits) / static_cast<double>(n);
    row.exact = exact_tail(model, t);
    row.bound = tail_bound(model, t);
    row.margin = row.bound - row.empirical;
    const double p = std::clamp(row.bound, 0.0, 1.0);
    row.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    row.pass = row.margin >= -3.0 * row.std_error;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace sparsefn
