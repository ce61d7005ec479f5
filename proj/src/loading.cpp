#include "sparsefn/loading.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsefn/errors.hpp"

namespace sparsefn {

std::string to_string(LoadingKind kind) {
  switch (kind) {
    case LoadingKind::explicit_values: return "explicit";
    case LoadingKind::homogeneous: return "homogeneous";
    case LoadingKind::two_phase: return "two_phase";
    case LoadingKind::exp_decay: return "exp_decay";
  }
  return "unknown";
}

LoadingKind loading_kind_from_string(const std::string& name) {
  if (name == "explicit") return LoadingKind::explicit_values;
  if (name == "homogeneous") return LoadingKind::homogeneous;
  if (name == "two_phase") return LoadingKind::two_phase;
  if (name == "exp_decay") return LoadingKind::exp_decay;
  throw InputError("unknown loading kind '" + name + "'");
}

LoadingVector LoadingVector::from_values(std::vector<double> values, LoadingOrigin origin) {
  require(!values.empty(), "loading vector must have dimension d >= 1");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "loading " + std::to_string(i) + " is not finite");
    require(values[i] != 0.0, "loading " + std::to_string(i) +
                                  " is zero (use --drop-zeros to remove zero loadings)");
  }
  LoadingVector out;
  out.origin_ = origin;
  out.order_.resize(values.size());
  std::iota(out.order_.begin(), out.order_.end(), std::size_t{0});
  std::stable_sort(out.order_.begin(), out.order_.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  out.values_.reserve(values.size());
  for (std::size_t k : out.order_) out.values_.push_back(values[k]);
  out.magnitudes_.reserve(values.size());
  out.log_magnitudes_.reserve(values.size());
  for (double v : out.values_) {
    out.magnitudes_.push_back(std::abs(v));
    out.log_magnitudes_.push_back(std::log(std::abs(v)));
  }
  return out;
}

std::vector<double> LoadingVector::to_sorted(std::span<const double> original) const {
  require(original.size() == dim(), "vector length does not match loading dimension");
  std::vector<double> out(dim());
  for (std::size_t k = 0; k < dim(); ++k) out[k] = original[order_[k]];
  return out;
}

std::vector<double> LoadingVector::to_original(std::span<const double> sorted) const {
  require(sorted.size() == dim(), "vector length does not match loading dimension");
  std::vector<double> out(dim());
  for (std::size_t k = 0; k < dim(); ++k) out[order_[k]] = sorted[k];
  return out;
}

bool LoadingVector::is_all_ones() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 1.0; });
}

double LoadingVector::squared_norm() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return acc;
}

namespace {

// floor(d^g) with a relative guard so exact powers (16^0.5) are not lost to rounding.
std::size_t floor_power(std::size_t d, double g) {
  const double p = std::pow(static_cast<double>(d), g);
  return static_cast<std::size_t>(std::floor(p * (1.0 + 1e-12)));
}

}  // namespace

LoadingVector make_loading(const LoadingSpec& spec) {
  if (spec.kind == LoadingKind::explicit_values) {
    return LoadingVector::from_values(spec.values, LoadingOrigin::explicit_input);
  }
  require(spec.d >= 1, "loading.d must be >= 1");
  std::vector<double> v(spec.d, 1.0);
  switch (spec.kind) {
    case LoadingKind::homogeneous:
      break;
    case LoadingKind::two_phase: {
      require(spec.gamma_d > 0.0 && std::isfinite(spec.gamma_d), "loading.gamma_d must be > 0");
      require(spec.gamma_lambda > 0.0 && std::isfinite(spec.gamma_lambda),
              "loading.gamma_lambda must be > 0");
      const std::size_t head = std::min(spec.d, floor_power(spec.d, spec.gamma_d));
      const double level = std::pow(static_cast<double>(spec.d), spec.gamma_lambda);
      std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(head), level);
      break;
    }
    case LoadingKind::exp_decay: {
      require(spec.c >= 0.0 && std::isfinite(spec.c), "loading.c must be >= 0");
      require(spec.gamma >= 1.0 && std::isfinite(spec.gamma),
              "loading.gamma must be >= 1 (phi must be convex)");
      for (std::size_t j = 0; j < spec.d; ++j) {
        v[j] = std::exp(-spec.c * std::pow(static_cast<double>(j), spec.gamma));
        require(v[j] > 0.0, "exp_decay loading underflows to zero at j=" + std::to_string(j + 1));
      }
      break;
    }
    case LoadingKind::explicit_values:
      break;
  }
  return LoadingVector::from_values(std::move(v), LoadingOrigin::generated);
}

std::vector<double> drop_zeros(std::span<const double> values, std::vector<std::size_t>* kept) {
  std::vector<double> out;
  if (kept) kept->clear();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0.0) continue;
    out.push_back(values[i]);
    if (kept) kept->push_back(i);
  }
  return out;
}

std::size_t effective_dimension(const LoadingVector& loading) {
  const auto mags = loading.magnitudes();
  for (std::size_t k = 0; k < mags.size(); ++k) {
    if (mags[k] < 0.5) return k + 1;
  }
  return loading.dim() + 1;
}

}  // namespace sparsefn
