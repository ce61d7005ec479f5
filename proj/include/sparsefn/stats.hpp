#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sparsefn {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);
double mean(std::span<const double> xs);
/// Unbiased sample variance (0 for fewer than two points).
double sample_variance(std::span<const double> xs);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 x^2}.
double kolmogorov_q(double x);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D), ne = n m / (n + m).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace sparsefn
