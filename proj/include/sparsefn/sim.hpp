#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsefn/estimators.hpp"
#include "sparsefn/loading.hpp"
#include "sparsefn/noise.hpp"

namespace sparsefn {

enum class ThetaKind { zero, fixed, spike_grid, prior };
enum class Placement { tail, head };

std::string to_string(ThetaKind kind);
std::string to_string(Placement placement);
ThetaKind theta_kind_from_string(const std::string& name);
Placement placement_from_string(const std::string& name);

/// How the true theta is chosen for each replicate.
///   zero        theta = 0
///   fixed       theta_j = magnitudes[k] on support[k] (0-based original indices;
///               a single magnitude is broadcast)
///   spike_grid  s spikes with eta_j theta_j = rho sigma tau lambda_o(s), placed on
///               the s smallest (tail) or largest (head) loadings
///   prior       a fresh draw from the least-favorable prior per replicate
struct ThetaSpec {
  ThetaKind kind = ThetaKind::zero;
  int s = 1;
  std::vector<std::size_t> support;
  std::vector<double> magnitudes;
  double rho = 1.0;
  Placement placement = Placement::tail;
  double c1 = 0.5;
  double c_alpha2 = 1.0;

  bool operator==(const ThetaSpec&) const = default;
};

struct EstimatorBlock {
  std::vector<Variant> variants{Variant::oracle};
  std::optional<int> s;  // sparsity handed to the estimators; defaults to theta.s
  double kappa = 1.0;
  std::optional<double> zeta;
  double gamma_split = 0.5;
  std::optional<double> c_H;

  bool operator==(const EstimatorBlock&) const = default;
};

/// Optional sweep axes. An empty axis keeps the base configuration's value.
/// The s axis sets both the true and the assumed sparsity.
struct GridAxes {
  std::vector<std::size_t> d;
  std::vector<int> s;
  std::vector<double> alpha;
  std::vector<double> rho;
  std::vector<Placement> placement;

  bool operator==(const GridAxes&) const = default;
  bool empty() const {
    return d.empty() && s.empty() && alpha.empty() && rho.empty() && placement.empty();
  }
};

struct SimConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  LoadingSpec loading;
  NoiseModel noise;
  double sigma = 1.0;
  EstimatorBlock estimator;
  ThetaSpec theta;
  int replicates = 1000;
  GridAxes grid;

  bool operator==(const SimConfig&) const = default;
};

struct SimOptions {
  int workers = 0;        // 0 means the OpenMP default
  bool parallel = true;   // false runs the serial reference loop
  std::ostream* log = nullptr;  // one line per finished cell
};

struct RiskRow {
  std::vector<std::pair<std::string, std::string>> keys;  // grid coordinates
  Variant estimator = Variant::oracle;
  std::size_t n_rep = 0;
  double mse = 0.0;
  double mse_se = 0.0;
  double mean_error = 0.0;
  std::string rate_kind;
  double rate_value = 0.0;  // sigma^2 times the rate
  double ratio = 0.0;       // mse / rate_value
};

struct SimulationReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> key_names;
  std::vector<RiskRow> rows;
};

/// Seed of the cell with the given canonical coordinates. Depends only on
/// the master seed and the resolved (alpha, d, placement, rho, s) values,
/// never on how the sweep was declared.
std::uint64_t cell_seed(std::uint64_t master, const std::string& canonical_key);

/// Monte Carlo risk of every configured estimator on one cell (the base
/// configuration; the grid is ignored). Estimators see identical noise.
SimulationReport run_risk(const SimConfig& config, const SimOptions& options = {});
SimulationReport run_risk_serial(const SimConfig& config);
/// Cartesian sweep over the grid axes; one row per (cell, estimator).
SimulationReport risk_grid(const SimConfig& config, const SimOptions& options = {});

void write_csv(const SimulationReport& report, std::ostream& out);
std::string report_json(const SimulationReport& report);

struct CoverageReport {
  std::size_t n = 0;
  double coverage = 0.0;          // fraction with sigma_hat^2 / sigma^2 in [1/2, 3/2]
  double mean_abs_rel_err = 0.0;  // mean |sigma_hat^2 - sigma^2| / sigma^2
};

CoverageReport run_mom_coverage(const SimConfig& config, const SimOptions& options = {});

struct PowerRow {
  double A = 0.0;
  double rho = 0.0;              // A sigma sqrt(Phi_o)
  std::vector<double> type_II;   // per alternative fixture
  double type_II_worst = 0.0;
  double total = 0.0;            // type I + worst type II
};

struct TestPowerReport {
  double t0 = 0.0;
  double B = 0.0;
  double threshold = 0.0;        // B sigma sqrt(Phi_o)
  std::size_t n = 0;
  std::vector<double> type_I_fixtures;
  double type_I = 0.0;           // worst over null fixtures
  std::vector<PowerRow> rows;
};

/// Error frequencies of the linear test. Null fixtures have L(theta) = t0:
/// a head spike carrying t0, and the same plus balanced +/- pairs at the
/// threshold level. Alternatives have L(theta) = t0 + rho: a single head
/// spike, an even split over s spikes, and s - 1 threshold-level spikes plus
/// a remainder spike. All fixtures share the replicate noise.
TestPowerReport run_test_power(const SimConfig& config, double t0, double B,
                               std::span<const double> A_grid, const SimOptions& options = {});

struct Calibration {
  double B = 0.0;
  double type_I = 0.0;
  std::vector<double> grid_type_I;  // per candidate B
};

/// Smallest B on the grid with worst null rejection rate <= eps/2, estimated
/// on a stream independent of run_test_power's.
Calibration calibrate_B(const SimConfig& config, double t0, double eps,
                        std::span<const double> B_grid, const SimOptions& options = {});

/// Shortest round-trip decimal form, used for keys and CSV cells.
std::string format_number(double x);

}  // namespace sparsefn
