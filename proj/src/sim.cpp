#include "sparsefn/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <ostream>

#include <json.hpp>

#include "sparsefn/config.hpp"
#include "sparsefn/errors.hpp"
#include "sparsefn/lowerbound.hpp"
#include "sparsefn/rates.hpp"
#include "sparsefn/rng.hpp"
#include "sparsefn/stats.hpp"
#include "sparsefn/version.hpp"

namespace sparsefn {

std::string to_string(ThetaKind kind) {
  switch (kind) {
    case ThetaKind::zero: return "zero";
    case ThetaKind::fixed: return "fixed";
    case ThetaKind::spike_grid: return "spike_grid";
    case ThetaKind::prior: return "prior";
  }
  return "unknown";
}

std::string to_string(Placement placement) {
  return placement == Placement::tail ? "tail" : "head";
}

ThetaKind theta_kind_from_string(const std::string& name) {
  if (name == "zero") return ThetaKind::zero;
  if (name == "fixed") return ThetaKind::fixed;
  if (name == "spike_grid") return ThetaKind::spike_grid;
  if (name == "prior") return ThetaKind::prior;
  throw InputError("unknown theta kind '" + name + "'");
}

Placement placement_from_string(const std::string& name) {
  if (name == "tail") return Placement::tail;
  if (name == "head") return Placement::head;
  throw InputError("unknown placement '" + name + "' (expected tail or head)");
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& canonical_key) {
  return mix_seed(master, canonical_key);
}

namespace {

constexpr std::size_t max_cells = 100000;

int thread_count(const SimOptions& o) { return o.workers > 0 ? o.workers : omp_get_max_threads(); }

/// Runs body(r) for r in [0, n), in parallel unless the options ask for the
/// serial reference. The first failure is rethrown with its replicate index.
template <class Body>
void for_replicates(std::size_t n, const SimOptions& options, std::uint64_t seed, Body body) {
  const long long nn = static_cast<long long>(n);
  long long failed_at = -1;
  std::string message;
  bool numerical = false;
#pragma omp parallel for schedule(static) if (options.parallel) num_threads(thread_count(options))
  for (long long r = 0; r < nn; ++r) {
    try {
      body(static_cast<std::size_t>(r));
    } catch (const std::exception& e) {
#pragma omp critical(sparsefn_replicate_failure)
      if (failed_at < 0 || r < failed_at) {
        failed_at = r;
        message = e.what();
        numerical = dynamic_cast<const NumericalError*>(&e) != nullptr;
      }
    }
  }
  if (failed_at >= 0) {
    const std::string where = "replicate " + std::to_string(failed_at) + " (stream seed " +
                              std::to_string(mix_seed(seed, static_cast<std::uint64_t>(failed_at))) +
                              "): " + message;
    if (numerical) throw NumericalError(where);
    throw InputError(where);
  }
}

struct CellCoordinates {
  double alpha = 2.0;
  std::size_t d = 0;
  Placement placement = Placement::tail;
  double rho = 1.0;
  int s = 1;

  std::string canonical() const {
    return "alpha=" + format_number(alpha) + ";d=" + std::to_string(d) +
           ";placement=" + to_string(placement) + ";rho=" + format_number(rho) +
           ";s=" + std::to_string(s);
  }
};

/// Everything a cell needs, resolved once and shared read-only by replicates.
struct Cell {
  SimConfig config;
  std::unique_ptr<LoadingVector> loading;
  std::vector<double> eta;        // original order
  int s_true = 1;
  int s_assumed = 1;
  std::vector<double> theta;      // original order; unused for the prior kind
  std::optional<LeastFavorablePrior> prior;
  std::uint64_t seed = 0;
  CellCoordinates coords;
};

int true_sparsity(const SimConfig& c) {
  switch (c.theta.kind) {
    case ThetaKind::fixed: return static_cast<int>(c.theta.support.size());
    default: return c.theta.s;
  }
}

std::unique_ptr<Cell> make_cell(const SimConfig& config) {
  auto cell = std::make_unique<Cell>();
  cell->config = config;
  const SimConfig& c = cell->config;
  require(c.replicates >= 1, "simulation.replicates must be >= 1");
  require(c.sigma >= 0.0 && std::isfinite(c.sigma), "sigma must be finite and >= 0");
  cell->loading = std::make_unique<LoadingVector>(make_loading(c.loading));
  const LoadingVector& loading = *cell->loading;
  const std::size_t d = loading.dim();
  cell->eta = loading.original_values();

  cell->s_true = true_sparsity(c);
  cell->s_assumed = c.estimator.s.value_or(std::max(cell->s_true, 1));
  require(cell->s_assumed >= 1 && static_cast<std::size_t>(cell->s_assumed) <= d,
          "estimator.s must lie in [1, d]");

  const double alpha = c.noise.alpha;
  cell->theta.assign(d, 0.0);
  switch (c.theta.kind) {
    case ThetaKind::zero:
      break;
    case ThetaKind::fixed: {
      const auto& sup = c.theta.support;
      const auto& mag = c.theta.magnitudes;
      require(mag.size() == 1 || mag.size() == sup.size(),
              "theta.magnitudes must have one entry or one per support index");
      require(static_cast<int>(sup.size()) == c.theta.s,
              "theta.s must equal the number of support indices for a fixed theta");
      for (std::size_t k = 0; k < sup.size(); ++k) {
        require(sup[k] < d, "theta.support index out of range");
        cell->theta[sup[k]] = mag.size() == 1 ? mag[0] : mag[k];
      }
      break;
    }
    case ThetaKind::spike_grid: {
      const int s = c.theta.s;
      require(s >= 1 && static_cast<std::size_t>(s) <= d, "theta.s must lie in [1, d]");
      const double lambda_o = oracle_rate(loading, alpha, s).lambda_o;
      const double product = c.theta.rho * c.sigma * c.noise.tau * lambda_o;
      const auto vals = loading.values();
      const auto order = loading.order();
      for (int k = 0; k < s; ++k) {
        const std::size_t pos = c.theta.placement == Placement::head
                                    ? static_cast<std::size_t>(k)
                                    : d - 1 - static_cast<std::size_t>(k);
        cell->theta[order[pos]] = product / vals[pos];
      }
      break;
    }
    case ThetaKind::prior:
      require(c.theta.s >= 1 && static_cast<std::size_t>(c.theta.s) <= d,
              "theta.s must lie in [1, d]");
      cell->prior = build_prior(loading, alpha, c.theta.s, c.theta.c1, c.theta.c_alpha2);
      break;
  }

  cell->coords = {alpha, d, c.theta.placement, c.theta.rho, cell->s_true};
  cell->seed = cell_seed(c.seed, cell->coords.canonical());
  return cell;
}

EstimatorOptions estimator_options(const Cell& cell) {
  const SimConfig& c = cell.config;
  EstimatorOptions o;
  o.alpha = c.noise.alpha;
  o.tau = c.noise.tau;
  o.sigma = c.sigma;
  o.kappa = c.estimator.kappa;
  o.s = cell.s_assumed;
  o.zeta = c.estimator.zeta;
  o.gamma_split = c.estimator.gamma_split;
  o.c_H = c.estimator.c_H;
  return o;
}

/// Fills y = theta + sigma xi for replicate r and returns L(theta).
double draw_observation(const Cell& cell, std::size_t r, std::vector<double>& y,
                        std::vector<double>& theta_buf) {
  const std::uint64_t stream = mix_seed(cell.seed, static_cast<std::uint64_t>(r));
  const std::vector<double>* theta = &cell.theta;
  if (cell.prior) {
    theta_buf = sample_prior(*cell.prior, *cell.loading, mix_seed(stream, std::uint64_t{1}));
    theta = &theta_buf;
  }
  Rng rng(stream);
  y.resize(cell.eta.size());
  sample_into(cell.config.noise, rng, y);
  double L = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = (*theta)[i] + cell.config.sigma * y[i];
    L += cell.eta[i] * (*theta)[i];
  }
  return L;
}

void run_cell(const Cell& cell, const SimOptions& options,
              const std::vector<std::pair<std::string, std::string>>& keys,
              std::vector<RiskRow>& rows) {
  const SimConfig& c = cell.config;
  const std::size_t n = static_cast<std::size_t>(c.replicates);
  const EstimatorOptions opts = estimator_options(cell);

  std::shared_ptr<const AdaptiveRateTable> table;
  std::vector<EstimatorPlan> plans;
  for (Variant v : c.estimator.variants) {
    if ((v == Variant::adaptive || v == Variant::family) && !table) {
      table = std::make_shared<AdaptiveRateTable>(*cell.loading, opts.alpha);
    }
    plans.emplace_back(v, *cell.loading, opts, table);
  }

  const std::size_t k = plans.size();
  std::vector<double> errors(n * k);
  for_replicates(n, options, cell.seed, [&](std::size_t r) {
    std::vector<double> y, theta_buf;
    const double L = draw_observation(cell, r, y, theta_buf);
    for (std::size_t e = 0; e < k; ++e) errors[e * n + r] = plans[e].value(y) - L;
  });

  for (std::size_t e = 0; e < k; ++e) {
    CompensatedSum sq, lin;
    for (std::size_t r = 0; r < n; ++r) {
      const double err = errors[e * n + r];
      sq.add(err * err);
      lin.add(err);
    }
    const double nd = static_cast<double>(n);
    const double mse = sq.value() / nd;
    CompensatedSum dev;
    for (std::size_t r = 0; r < n; ++r) {
      const double err = errors[e * n + r];
      dev.add((err * err - mse) * (err * err - mse));
    }
    RiskRow row;
    row.keys = keys;
    row.estimator = plans[e].variant();
    row.n_rep = n;
    row.mse = mse;
    row.mse_se = n > 1 ? std::sqrt(dev.value() / (nd - 1.0) / nd) : 0.0;
    row.mean_error = lin.value() / nd;
    row.rate_kind = plans[e].rate_kind();
    row.rate_value = c.sigma * c.sigma * plans[e].rate();
    row.ratio = row.rate_value > 0.0 ? mse / row.rate_value
                                     : (mse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rows.push_back(std::move(row));
  }
  if (options.log) {
    *options.log << "cell " << cell.coords.canonical() << " done (" << n << " replicates)\n";
  }
}

SimulationReport empty_report(const SimConfig& config) {
  SimulationReport rep;
  rep.config_hash = config_hash(config);
  rep.seed = config.seed;
  return rep;
}

}  // namespace

SimulationReport run_risk(const SimConfig& config, const SimOptions& options) {
  SimulationReport rep = empty_report(config);
  const auto cell = make_cell(config);
  run_cell(*cell, options, {}, rep.rows);
  return rep;
}

SimulationReport run_risk_serial(const SimConfig& config) {
  SimOptions o;
  o.parallel = false;
  return run_risk(config, o);
}

SimulationReport risk_grid(const SimConfig& config, const SimOptions& options) {
  SimulationReport rep = empty_report(config);
  const GridAxes& g = config.grid;
  require(g.d.empty() || config.loading.kind != LoadingKind::explicit_values,
          "simulation.grid.d cannot be combined with an explicit loading");
  if (!g.alpha.empty()) rep.key_names.push_back("alpha");
  if (!g.d.empty()) rep.key_names.push_back("d");
  if (!g.placement.empty()) rep.key_names.push_back("placement");
  if (!g.rho.empty()) rep.key_names.push_back("rho");
  if (!g.s.empty()) rep.key_names.push_back("s");

  auto axis_or = [](const auto& axis, auto base) {
    using T = decltype(base);
    return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto alphas = axis_or(g.alpha, config.noise.alpha);
  const auto ds = axis_or(g.d, config.loading.d);
  const auto places = axis_or(g.placement, config.theta.placement);
  const auto rhos = axis_or(g.rho, config.theta.rho);
  const auto ss = axis_or(g.s, config.theta.s);
  const std::size_t cells = alphas.size() * ds.size() * places.size() * rhos.size() * ss.size();
  require(cells <= max_cells, "simulation grid has too many cells");

  for (double alpha : alphas)
    for (std::size_t d : ds)
      for (Placement pl : places)
        for (double rho : rhos)
          for (int s : ss) {
            SimConfig c = config;
            c.grid = {};
            if (!g.alpha.empty()) c.noise = NoiseModel::make(c.noise.family, alpha, c.noise.tau,
                                                             c.noise.noise_class);
            if (!g.d.empty()) c.loading.d = d;
            c.theta.placement = pl;
            c.theta.rho = rho;
            if (!g.s.empty()) {
              c.theta.s = s;
              c.estimator.s = s;
            }
            std::vector<std::pair<std::string, std::string>> keys;
            for (const auto& name : rep.key_names) {
              if (name == "alpha") keys.emplace_back(name, format_number(alpha));
              if (name == "d") keys.emplace_back(name, std::to_string(d));
              if (name == "placement") keys.emplace_back(name, to_string(pl));
              if (name == "rho") keys.emplace_back(name, format_number(rho));
              if (name == "s") keys.emplace_back(name, std::to_string(s));
            }
            const auto cell = make_cell(c);
            run_cell(*cell, options, keys, rep.rows);
          }
  return rep;
}

void write_csv(const SimulationReport& report, std::ostream& out) {
  out << "# tool_version=" << tool_version << " config_hash=" << report.config_hash
      << " seed=" << report.seed << "\n";
  for (const auto& k : report.key_names) out << k << ",";
  out << "estimator,n_rep,mse,mse_se,rate_kind,rate_value,ratio\n";
  for (const auto& row : report.rows) {
    for (const auto& kv : row.keys) out << kv.second << ",";
    out << to_string(row.estimator) << "," << row.n_rep << "," << format_number(row.mse) << ","
        << format_number(row.mse_se) << "," << row.rate_kind << ","
        << format_number(row.rate_value) << "," << format_number(row.ratio) << "\n";
  }
}

std::string report_json(const SimulationReport& report) {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    for (const auto& kv : row.keys) r[kv.first] = kv.second;
    r["estimator"] = to_string(row.estimator);
    r["n_rep"] = row.n_rep;
    r["mse"] = row.mse;
    r["mse_se"] = row.mse_se;
    r["rate_kind"] = row.rate_kind;
    r["rate_value"] = row.rate_value;
    r["ratio"] = row.ratio;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

CoverageReport run_mom_coverage(const SimConfig& config, const SimOptions& options) {
  const auto cell = make_cell(config);
  const std::size_t d = cell->loading->dim();
  const double gamma = config.estimator.gamma_split;
  const double m = std::floor(gamma * static_cast<double>(d) * (1.0 + 1e-12));
  require(config.noise.noise_class == NoiseClass::G, "MoM coverage needs class-G noise");
  require(4.0 * cell->s_true < m, "MoM coverage needs s < floor(gamma_split d)/4");
  require(config.sigma > 0.0, "MoM coverage needs sigma > 0");

  const std::size_t n = static_cast<std::size_t>(config.replicates);
  std::vector<double> ratio(n);
  for_replicates(n, options, cell->seed, [&](std::size_t r) {
    std::vector<double> y, theta_buf;
    draw_observation(*cell, r, y, theta_buf);
    ratio[r] = mom_sigma(y, gamma) / (config.sigma * config.sigma);
  });

  CoverageReport rep;
  rep.n = n;
  std::size_t covered = 0;
  CompensatedSum err;
  for (double q : ratio) {
    covered += (q >= 0.5 && q <= 1.5) ? 1 : 0;
    err.add(std::abs(q - 1.0));
  }
  rep.coverage = static_cast<double>(covered) / static_cast<double>(n);
  rep.mean_abs_rel_err = err.value() / static_cast<double>(n);
  return rep;
}

namespace {

struct TestSetup {
  std::unique_ptr<Cell> cell;
  std::unique_ptr<EstimatorPlan> plan;
  double root_phi = 0.0;   // sqrt(Phi_o)
  double level = 0.0;      // sigma tau lambda_o: a threshold-level contribution
};

TestSetup make_test_setup(const SimConfig& config) {
  SimConfig c = config;
  c.theta = ThetaSpec{};
  c.theta.kind = ThetaKind::zero;
  c.theta.s = config.estimator.s.value_or(config.theta.s);
  c.estimator.variants = {Variant::oracle};
  TestSetup t;
  t.cell = make_cell(c);
  require(c.sigma > 0.0, "the linear test needs sigma > 0");
  const EstimatorOptions opts = estimator_options(*t.cell);
  t.plan = std::make_unique<EstimatorPlan>(Variant::oracle, *t.cell->loading, opts);
  t.root_phi = std::sqrt(t.plan->rate());
  t.level = c.sigma * c.noise.tau * oracle_rate(*t.cell->loading, opts.alpha, opts.s).lambda_o;
  return t;
}

/// Contribution vectors c (sorted order, c_k = eta_k theta_k) for the fixtures.
std::vector<std::vector<double>> null_fixtures(std::size_t d, int s, double t0, double level) {
  std::vector<double> head(d, 0.0);
  head[0] = t0;
  std::vector<double> pairs = head;
  const int npairs = (s - 1) / 2;
  for (int p = 0; p < npairs; ++p) {
    const std::size_t a = d - 1 - 2 * static_cast<std::size_t>(p);
    pairs[a] += level;
    pairs[a - 1] -= level;
  }
  return {head, pairs};
}

std::vector<std::vector<double>> alternative_fixtures(std::size_t d, int s, double target,
                                                      double level) {
  std::vector<double> head(d, 0.0);
  head[0] = target;
  std::vector<double> split(d, 0.0);
  for (int k = 0; k < s; ++k) split[static_cast<std::size_t>(k)] = target / s;
  std::vector<double> mixed(d, 0.0);
  mixed[0] = target - (s - 1) * level;
  for (int k = 1; k < s; ++k) mixed[d - static_cast<std::size_t>(k)] += level;
  return {head, split, mixed};
}

/// Statistic of the oracle test for each fixture and replicate, laid out
/// [fixture][replicate]. Fixtures are contribution vectors in sorted order.
std::vector<std::vector<double>> fixture_statistics(const TestSetup& t,
                                                    const std::vector<std::vector<double>>& fx,
                                                    std::size_t n, std::uint64_t seed,
                                                    const SimOptions& options) {
  const LoadingVector& loading = *t.cell->loading;
  const auto vals = loading.values();
  std::vector<std::vector<double>> thetas;
  for (const auto& c : fx) {
    std::vector<double> th(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) th[k] = c[k] / vals[k];
    thetas.push_back(loading.to_original(th));
  }
  std::vector<std::vector<double>> stats(fx.size(), std::vector<double>(n));
  const NoiseModel& noise = t.cell->config.noise;
  const double sigma = t.cell->config.sigma;
  for_replicates(n, options, seed, [&](std::size_t r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<double> xi(vals.size()), y(vals.size());
    sample_into(noise, rng, xi);
    for (std::size_t f = 0; f < thetas.size(); ++f) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = thetas[f][i] + sigma * xi[i];
      stats[f][r] = t.plan->value(y);
    }
  });
  return stats;
}

double rejection_rate(const std::vector<double>& stats, double t0, double threshold) {
  std::size_t rej = 0;
  for (double v : stats) rej += std::abs(v - t0) > threshold ? 1 : 0;
  return static_cast<double>(rej) / static_cast<double>(stats.size());
}

}  // namespace

TestPowerReport run_test_power(const SimConfig& config, double t0, double B,
                               std::span<const double> A_grid, const SimOptions& options) {
  require(B > 0.0, "B must be positive");
  const TestSetup t = make_test_setup(config);
  const std::size_t d = t.cell->loading->dim();
  const int s = t.cell->s_true;
  const std::size_t n = static_cast<std::size_t>(config.replicates);
  const std::uint64_t seed = mix_seed(t.cell->seed, "power");
  const double sigma = config.sigma;

  TestPowerReport rep;
  rep.t0 = t0;
  rep.B = B;
  rep.n = n;
  rep.threshold = B * sigma * t.root_phi;

  const auto nulls = fixture_statistics(t, null_fixtures(d, s, t0, t.level), n, seed, options);
  for (const auto& st : nulls) rep.type_I_fixtures.push_back(rejection_rate(st, t0, rep.threshold));
  rep.type_I = *std::max_element(rep.type_I_fixtures.begin(), rep.type_I_fixtures.end());

  for (double A : A_grid) {
    require(A >= 0.0, "A grid must be non-negative");
    PowerRow row;
    row.A = A;
    row.rho = A * sigma * t.root_phi;
    const auto alts = fixture_statistics(
        t, alternative_fixtures(d, s, t0 + row.rho, t.level), n, seed, options);
    for (const auto& st : alts) {
      row.type_II.push_back(1.0 - rejection_rate(st, t0, rep.threshold));
    }
    row.type_II_worst = *std::max_element(row.type_II.begin(), row.type_II.end());
    row.total = rep.type_I + row.type_II_worst;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

Calibration calibrate_B(const SimConfig& config, double t0, double eps,
                        std::span<const double> B_grid, const SimOptions& options) {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(!B_grid.empty(), "B grid must be non-empty");
  const TestSetup t = make_test_setup(config);
  const std::size_t d = t.cell->loading->dim();
  const std::size_t n = static_cast<std::size_t>(config.replicates);
  const std::uint64_t seed = mix_seed(t.cell->seed, "calibration");
  const auto nulls =
      fixture_statistics(t, null_fixtures(d, t.cell->s_true, t0, t.level), n, seed, options);

  std::vector<double> grid(B_grid.begin(), B_grid.end());
  std::sort(grid.begin(), grid.end());
  Calibration cal;
  bool found = false;
  for (double B : grid) {
    require(B > 0.0, "B grid must be positive");
    const double thr = B * config.sigma * t.root_phi;
    double worst = 0.0;
    for (const auto& st : nulls) worst = std::max(worst, rejection_rate(st, t0, thr));
    cal.grid_type_I.push_back(worst);
    if (!found && worst <= eps / 2.0) {
      cal.B = B;
      cal.type_I = worst;
      found = true;
    }
  }
  if (!found) throw NumericalError("no B on the grid keeps the type I error below eps/2");
  return cal;
}

}  // namespace sparsefn
