#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sparsefn {

enum class LoadingKind { explicit_values, homogeneous, two_phase, exp_decay };

enum class LoadingOrigin { explicit_input, generated };

std::string to_string(LoadingKind kind);
LoadingKind loading_kind_from_string(const std::string& name);

/// Parameters for building a loading vector. Only the fields relevant to
/// `kind` are read.
struct LoadingSpec {
  LoadingKind kind = LoadingKind::homogeneous;
  std::size_t d = 0;
  // two_phase: floor(d^gamma_d) leading entries equal to d^gamma_lambda.
  double gamma_d = 0.0;
  double gamma_lambda = 0.0;
  // exp_decay: eta_j = exp(-c * (j-1)^gamma).
  double c = 1.0;
  double gamma = 1.0;
  // explicit_values
  std::vector<double> values;

  bool operator==(const LoadingSpec&) const = default;
};

/// Nonzero loadings stored sorted by decreasing magnitude. The permutation
/// back to the caller's coordinate order is kept alongside.
class LoadingVector {
 public:
  static LoadingVector from_values(std::vector<double> values,
                                   LoadingOrigin origin = LoadingOrigin::explicit_input);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<const double> values() const { return values_; }
  std::span<const double> magnitudes() const { return magnitudes_; }
  std::span<const double> log_magnitudes() const { return log_magnitudes_; }
  /// order()[k] is the input index of sorted position k.
  std::span<const std::size_t> order() const { return order_; }
  LoadingOrigin origin() const { return origin_; }

  /// Input-order vector -> sorted-order vector.
  std::vector<double> to_sorted(std::span<const double> original) const;
  /// Sorted-order vector -> input-order vector.
  std::vector<double> to_original(std::span<const double> sorted) const;
  /// The loadings in the caller's original order.
  std::vector<double> original_values() const { return to_original(values_); }

  bool is_all_ones() const;
  double squared_norm() const;

 private:
  std::vector<double> values_;
  std::vector<double> magnitudes_;
  std::vector<double> log_magnitudes_;
  std::vector<std::size_t> order_;
  LoadingOrigin origin_ = LoadingOrigin::explicit_input;
};

LoadingVector make_loading(const LoadingSpec& spec);

/// Removes exact zeros. `kept` (optional) receives the surviving input indices.
std::vector<double> drop_zeros(std::span<const double> values,
                               std::vector<std::size_t>* kept = nullptr);

/// j0 = min{j : |eta_j| < 1/2} (1-based), or d+1 if no such j.
std::size_t effective_dimension(const LoadingVector& loading);

}  // namespace sparsefn
