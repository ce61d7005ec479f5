#include "sparsefn/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsefn/config.hpp"
#include "sparsefn/errors.hpp"
#include "sparsefn/estimators.hpp"
#include "sparsefn/lowerbound.hpp"
#include "sparsefn/rates.hpp"
#include "sparsefn/rng.hpp"
#include "sparsefn/sim.hpp"
#include "sparsefn/stats.hpp"
#include "sparsefn/threshold.hpp"
#include "sparsefn/version.hpp"

namespace sparsefn::cli {

using nlohmann::ordered_json;

namespace {

struct LoadingArgs {
  std::string spec;
  std::size_t d = 0;
  double gamma_d = 0.0;
  double gamma_lambda = 0.0;
  double c = 1.0;
  double gamma = 1.0;
  std::string file;
  bool drop_zeros = false;
};

struct Loaded {
  LoadingSpec spec;
  LoadingVector vector;
  std::vector<std::size_t> kept;  // surviving input rows when zeros were dropped
};

void add_loading_options(CLI::App* app, LoadingArgs& a) {
  app->add_option("--loading-spec", a.spec, "Generated loading: homogeneous, two_phase, exp_decay");
  app->add_option("--d", a.d, "Dimension of a generated loading");
  app->add_option("--gamma-d", a.gamma_d, "two_phase: floor(d^gamma_d) large entries");
  app->add_option("--gamma-lambda", a.gamma_lambda, "two_phase: large entries equal d^gamma_lambda");
  app->add_option("--c", a.c, "exp_decay: eta_j = exp(-c (j-1)^gamma)");
  app->add_option("--gamma", a.gamma, "exp_decay exponent (>= 1)");
  app->add_option("--loading-file", a.file, "Explicit loadings, one number per line");
  app->add_flag("--drop-zeros", a.drop_zeros, "Drop zero loadings (and the matching observations)");
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v;
    std::string rest;
    if (!(ss >> v) || (ss >> rest)) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected one number per line");
    }
    out.push_back(v);
  }
  return out;
}

Loaded load(const LoadingArgs& a) {
  LoadingSpec spec;
  std::vector<std::size_t> kept;
  if (!a.file.empty()) {
    require(a.spec.empty(), "use either --loading-file or --loading-spec, not both");
    std::vector<double> values = read_numbers(a.file);
    if (a.drop_zeros) {
      values = drop_zeros(values, &kept);
    } else {
      for (std::size_t i = 0; i < values.size(); ++i) kept.push_back(i);
    }
    spec.kind = LoadingKind::explicit_values;
    spec.values = values;
    spec.d = values.size();
  } else {
    require(!a.spec.empty(), "a loading is required: --loading-spec or --loading-file");
    spec.kind = loading_kind_from_string(a.spec);
    require(spec.kind != LoadingKind::explicit_values, "explicit loadings come from --loading-file");
    spec.d = a.d;
    spec.gamma_d = a.gamma_d;
    spec.gamma_lambda = a.gamma_lambda;
    spec.c = a.c;
    spec.gamma = a.gamma;
    for (std::size_t i = 0; i < a.d; ++i) kept.push_back(i);
  }
  LoadingVector v = make_loading(spec);
  return {spec, std::move(v), std::move(kept)};
}

ordered_json loading_json(const LoadingArgs& a) {
  ordered_json j;
  if (!a.file.empty()) {
    j["file"] = a.file;
    j["drop_zeros"] = a.drop_zeros;
  } else {
    j["spec"] = a.spec;
    j["d"] = a.d;
    j["gamma_d"] = a.gamma_d;
    j["gamma_lambda"] = a.gamma_lambda;
    j["c"] = a.c;
    j["gamma"] = a.gamma;
  }
  return j;
}

/// Adds the reproducibility block; the hash covers the canonical inputs.
void stamp(ordered_json& out, const ordered_json& inputs, std::uint64_t seed) {
  out["tool_version"] = tool_version;
  out["config_hash"] = hex64(fnv1a64(inputs.dump()));
  out["seed"] = seed;
  out["inputs"] = inputs;
}

ordered_json solution_json(const ThresholdSolution& s) {
  return {{"equation", to_string(s.equation)}, {"target", s.target},   {"beta", s.beta},
          {"lambda", s.lambda},                {"residual", s.residual}, {"iterations", s.iterations}};
}

ordered_json rate_json(const RateProfile& r) {
  return {{"s", r.s},   {"alpha", r.alpha}, {"beta", r.beta},  {"lambda_o", r.lambda_o},
          {"nu", r.nu}, {"j1", r.j1},       {"phi_o", r.phi_o}};
}

ordered_json adaptive_json(const AdaptiveRateProfile& r) {
  return {{"s", r.s},           {"beta_star", r.beta_star}, {"lambda_star", r.lambda_star},
          {"nu_star", r.nu_star}, {"j2", r.j2},             {"s_star", r.s_star},
          {"s0", r.s0},         {"phi_star", r.phi_star},   {"phi_adp", r.phi_adp}};
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& idx,
                                   const std::vector<std::size_t>& kept) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) out.push_back(kept[i] + 1);
  return out;
}

std::optional<double> closed_form_for(const Loaded& l, double alpha, int s) {
  ClosedFormParams p;
  p.d = static_cast<double>(l.vector.dim());
  p.alpha = alpha;
  switch (l.spec.kind) {
    case LoadingKind::homogeneous:
      return closed_form_rate(ClosedFormKind::homogeneous_oracle, p, s);
    case LoadingKind::two_phase:
      p.gamma_d = l.spec.gamma_d;
      p.gamma_lambda = l.spec.gamma_lambda;
      return closed_form_rate(ClosedFormKind::two_phase_oracle, p, s);
    case LoadingKind::exp_decay:
      p.j0 = static_cast<double>(effective_dimension(l.vector));
      return closed_form_rate(ClosedFormKind::exp_decay_oracle, p, s);
    case LoadingKind::explicit_values:
      return std::nullopt;
  }
  return std::nullopt;
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot write '" + path + "'");
  f << text;
}

struct EstimateArgs {
  std::string variant = "oracle";
  int s = 1;
  double alpha = 2.0;
  double tau = 2.0;
  std::optional<double> sigma;
  bool sigma_unknown = false;
  double kappa = 1.0;
  std::optional<double> zeta;
  double gamma_split = 0.5;
  std::optional<double> c_H;
  std::optional<std::uint64_t> shuffle_blocks;
  std::string y_file;
};

void add_estimate_options(CLI::App* app, EstimateArgs& a, bool with_variant) {
  if (with_variant) {
    app->add_option("--variant", a.variant,
                    "oracle, family, adaptive, nonsym, unknown-sigma, collier, plug-in");
  }
  app->add_option("--s", a.s, "Sparsity level");
  app->add_option("--alpha", a.alpha, "Noise tail exponent");
  app->add_option("--tau", a.tau, "Noise tail scale");
  auto* sig = app->add_option("--sigma", a.sigma, "Noise level");
  auto* unk = app->add_flag("--sigma-unknown", a.sigma_unknown, "Estimate sigma by median of means");
  sig->excludes(unk);
  app->add_option("--kappa", a.kappa, "Threshold multiplier");
  if (with_variant) {
    app->add_option("--zeta", a.zeta, "Lepski band constant (default 1000 if alpha >= 2, else 1e4)");
    app->add_option("--gamma-split", a.gamma_split, "Median-of-means block fraction");
    app->add_option("--c-H", a.c_H, "Non-symmetric threshold constant (default tau 4^{1/alpha})");
    app->add_option("--shuffle-blocks", a.shuffle_blocks, "Seeded permutation before MoM blocking");
  }
  app->add_option("--y-file", a.y_file, "Observations, one number per line")->required();
}

ordered_json estimate_inputs(const EstimateArgs& a, const LoadingArgs& l) {
  ordered_json j;
  j["variant"] = a.variant;
  j["s"] = a.s;
  j["alpha"] = a.alpha;
  j["tau"] = a.tau;
  j["sigma"] = a.sigma ? ordered_json(*a.sigma) : ordered_json(nullptr);
  j["kappa"] = a.kappa;
  j["zeta"] = a.zeta ? ordered_json(*a.zeta) : ordered_json(nullptr);
  j["gamma_split"] = a.gamma_split;
  j["c_H"] = a.c_H ? ordered_json(*a.c_H) : ordered_json(nullptr);
  j["shuffle_blocks"] = a.shuffle_blocks ? ordered_json(*a.shuffle_blocks) : ordered_json(nullptr);
  j["y_file"] = a.y_file;
  j["loading"] = loading_json(l);
  return j;
}

std::vector<double> read_observations(const EstimateArgs& a, const Loaded& l, std::size_t raw_d) {
  std::vector<double> raw = read_numbers(a.y_file);
  require(raw.size() == raw_d, "--y-file has " + std::to_string(raw.size()) +
                                   " values but the loading has " + std::to_string(raw_d));
  std::vector<double> y;
  for (std::size_t i : l.kept) y.push_back(raw[i]);
  return y;
}

std::size_t raw_dimension(const LoadingArgs& a, const Loaded& l) {
  return a.file.empty() ? l.vector.dim() : read_numbers(a.file).size();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sparsefn: estimation of linear functionals of sparse vectors under sub-Weibull noise"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", tool_version);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed recorded in every output (and used by random subcommands)");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve a threshold equation");
  LoadingArgs solve_l;
  add_loading_options(solve, solve_l);
  std::string equation = "oracle";
  double solve_alpha = 2.0;
  std::optional<int> solve_s;
  std::optional<double> solve_target;
  solve->add_option("--equation", equation, "oracle, adaptive or asym");
  solve->add_option("--alpha", solve_alpha, "Tail exponent");
  solve->add_option("--s", solve_s, "Sparsity level");
  solve->add_option("--target", solve_target, "Explicit right-hand side (oracle equation only)");

  // rate
  auto* rate = app.add_subcommand("rate", "Rate quantities for one s or a grid of s");
  LoadingArgs rate_l;
  add_loading_options(rate, rate_l);
  double rate_alpha = 2.0;
  std::vector<int> s_grid;
  bool csv = false;
  rate->add_option("--alpha", rate_alpha, "Tail exponent");
  rate->add_option("--s", s_grid, "Sparsity level(s), comma separated")->delimiter(',');
  rate->add_flag("--csv", csv, "One CSV row per s instead of JSON");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate the linear functional");
  LoadingArgs est_l;
  EstimateArgs est;
  add_loading_options(estimate, est_l);
  add_estimate_options(estimate, est, true);

  // test
  auto* test = app.add_subcommand("test", "Test L(theta) = t0 against |L(theta) - t0| large");
  LoadingArgs test_l;
  EstimateArgs test_a;
  double t0 = 0.0;
  double B = 1.0;
  add_loading_options(test, test_l);
  add_estimate_options(test, test_a, false);
  test->add_option("--t0", t0, "Null value")->required();
  test->add_option("--B", B, "Rejection constant")->required();

  // prior
  auto* prior = app.add_subcommand("prior", "Least-favorable prior: moments, chi-square bound, samples");
  LoadingArgs prior_l;
  add_loading_options(prior, prior_l);
  double prior_alpha = 2.0;
  int prior_s = 1;
  double c1 = 0.5;
  double c_alpha1 = 1.0;
  double c_alpha2 = 1.0;
  std::size_t samples = 0;
  std::string prior_out;
  prior->add_option("--alpha", prior_alpha, "Tail exponent");
  prior->add_option("--s", prior_s, "Sparsity level");
  prior->add_option("--c1", c1, "Activation scale in (0, 2)");
  prior->add_option("--c-alpha1", c_alpha1, "Chi-square bound constant (>= 1)");
  prior->add_option("--c-alpha2", c_alpha2, "Spike scale constant");
  prior->add_option("--samples", samples, "Number of theta draws to write");
  prior->add_option("--out", prior_out, "File for sampled theta vectors (one per line)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo risk experiment");
  std::string config_path;
  std::string sim_out;
  int workers = 0;
  if (const char* env = std::getenv("SPARSEFN_WORKERS")) {
    try {
      workers = std::stoi(env);
    } catch (const std::exception&) {
      err << "ignoring SPARSEFN_WORKERS='" << env << "'\n";
    }
  }
  std::string format = "csv";
  bool sim_log = false;
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", sim_out, "Output file (stdout if omitted)");
  simulate->add_option("--workers", workers, "Worker threads (0 = all; env SPARSEFN_WORKERS)");
  simulate->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  simulate->add_flag("--log", sim_log, "Print one line per finished cell to stderr");

  std::vector<std::string> argv_store{"sparsefn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) {
      const Loaded l = load(solve_l);
      ordered_json inputs{{"command", "solve"}, {"equation", equation}, {"alpha", solve_alpha},
                          {"s", solve_s ? ordered_json(*solve_s) : ordered_json(nullptr)},
                          {"target", solve_target ? ordered_json(*solve_target) : ordered_json(nullptr)},
                          {"loading", loading_json(solve_l)}};
      ThresholdSolution sol;
      if (equation == "oracle") {
        require(solve_s || solve_target, "solve needs --s or --target");
        double target = solve_target ? *solve_target : 0.5 * *solve_s;
        if (solve_s) {
          require(*solve_s >= 1 && static_cast<std::size_t>(*solve_s) <= l.vector.dim(),
                  "s must lie in [1, d]");
        }
        require(target > 0.0, "target must be positive");
        sol = solve_beta(l.vector, solve_alpha, target);
      } else if (equation == "adaptive") {
        require(solve_s.has_value(), "the adaptive equation needs --s");
        sol = solve_adaptive_beta(l.vector, solve_alpha, *solve_s);
      } else if (equation == "asym") {
        require(solve_s.has_value(), "the asym equation needs --s");
        sol = solve_lambda_H(l.vector, solve_alpha, *solve_s);
      } else {
        throw InputError("unknown equation '" + equation + "'");
      }
      ordered_json j = solution_json(sol);
      stamp(j, inputs, seed);
      out << j.dump(2) << "\n";
      return 0;
    }

    if (rate->parsed()) {
      const Loaded l = load(rate_l);
      const int d = static_cast<int>(l.vector.dim());
      std::vector<int> grid = s_grid;
      if (grid.empty()) {
        for (int s = 1; s < d; s *= 2) grid.push_back(s);
        grid.push_back(d);
      }
      for (int s : grid) require(s >= 1 && s <= d, "s must lie in [1, d]");
      ordered_json inputs{{"command", "rate"}, {"alpha", rate_alpha}, {"s", grid},
                          {"loading", loading_json(rate_l)}};
      const AdaptiveRateTable table(l.vector, rate_alpha);
      if (csv) {
        out << "# tool_version=" << tool_version
            << " config_hash=" << hex64(fnv1a64(inputs.dump())) << " seed=" << seed << "\n";
        out << "s,beta,lambda_o,nu,j1,phi_o,lambda_star,nu_star,phi_star,phi_adp,closed_form,ratio\n";
        for (int s : grid) {
          const RateProfile r = oracle_rate(l.vector, rate_alpha, s);
          const AdaptiveRateProfile a = table.profile(s);
          const auto cf = closed_form_for(l, rate_alpha, s);
          out << s << "," << format_number(r.beta) << "," << format_number(r.lambda_o) << ","
              << format_number(r.nu) << "," << r.j1 << "," << format_number(r.phi_o) << ","
              << format_number(a.lambda_star) << "," << format_number(a.nu_star) << ","
              << format_number(a.phi_star) << "," << format_number(a.phi_adp) << ","
              << (cf ? format_number(*cf) : "") << ","
              << (cf ? format_number(r.phi_o / *cf) : "") << "\n";
        }
        return 0;
      }
      ordered_json rows = ordered_json::array();
      for (int s : grid) {
        ordered_json row;
        row["oracle"] = rate_json(oracle_rate(l.vector, rate_alpha, s));
        row["adaptive"] = adaptive_json(table.profile(s));
        const auto cf = closed_form_for(l, rate_alpha, s);
        row["closed_form"] = cf ? ordered_json(*cf) : ordered_json(nullptr);
        rows.push_back(row);
      }
      ordered_json j;
      j["rates"] = rows;
      stamp(j, inputs, seed);
      out << j.dump(2) << "\n";
      return 0;
    }

    if (estimate->parsed() || test->parsed()) {
      const bool is_test = test->parsed();
      const EstimateArgs& a = is_test ? test_a : est;
      const LoadingArgs& la = is_test ? test_l : est_l;
      const Loaded l = load(la);
      const std::vector<double> y = read_observations(a, l, raw_dimension(la, l));
      ordered_json inputs = estimate_inputs(a, la);
      inputs["command"] = is_test ? "test" : "estimate";
      EstimationInput in{y, l.vector, a.alpha, a.tau, a.sigma, a.kappa};
      if (is_test) {
        require(a.sigma.has_value(), "the test needs --sigma");
        inputs["t0"] = t0;
        inputs["B"] = B;
        const TestResult r = linear_test(in, a.s, t0, B);
        ordered_json j{{"decision", r.decision}, {"statistic", r.statistic},
                       {"threshold", r.threshold}, {"warnings", r.warnings}};
        stamp(j, inputs, seed);
        out << j.dump(2) << "\n";
        return 0;
      }
      const Variant v = variant_from_string(a.variant);
      require(v == Variant::unknown_sigma || a.sigma.has_value(),
              "variant '" + a.variant + "' needs --sigma");
      require(v != Variant::unknown_sigma || !a.sigma.has_value(),
              "the unknown-sigma variant takes --sigma-unknown, not --sigma");
      EstimatorOptions o;
      o.alpha = a.alpha;
      o.tau = a.tau;
      o.sigma = a.sigma;
      o.kappa = a.kappa;
      o.s = a.s;
      o.zeta = a.zeta;
      o.gamma_split = a.gamma_split;
      o.c_H = a.c_H;
      o.shuffle_seed = a.shuffle_blocks;
      if (v == Variant::adaptive) o.s = 1;
      const EstimatorPlan plan(v, l.vector, o);
      const EstimateResult r = plan.estimate(y);
      ordered_json j{{"variant", to_string(r.variant)},
                     {"value", r.value},
                     {"s_used", r.s_used},
                     {"threshold", r.threshold},
                     {"plug_in_count", r.plug_in_count},
                     {"kept_indices", one_based(r.kept_indices, l.kept)},
                     {"warnings", r.warnings}};
      if (v == Variant::adaptive) {
        const LepskiResult lr = plan.lepski(y);
        j["lepski"] = {{"s_hat", lr.s_hat},         {"s_star", lr.s_star},
                       {"s0", lr.s0},               {"estimates", lr.estimates},
                       {"omegas", lr.omegas}};
      }
      stamp(j, inputs, seed);
      out << j.dump(2) << "\n";
      return 0;
    }

    if (prior->parsed()) {
      const Loaded l = load(prior_l);
      ordered_json inputs{{"command", "prior"}, {"alpha", prior_alpha}, {"s", prior_s},
                          {"c1", c1},           {"c_alpha1", c_alpha1}, {"c_alpha2", c_alpha2},
                          {"samples", samples}, {"loading", loading_json(prior_l)}};
      const LeastFavorablePrior p = build_prior(l.vector, prior_alpha, prior_s, c1, c_alpha2);
      const PriorMoments m = prior_moments(p, l.vector);
      const Chi2Bound b = chi2_mixture_bound(p, c_alpha1);
      ordered_json j;
      j["lambda_o"] = p.lambda_o;
      j["nu"] = p.nu;
      j["j1"] = p.j1;
      j["sum_pi"] = m.mean_support;
      j["moments"] = {{"mean_support", m.mean_support}, {"var_support", m.var_support},
                      {"mean_L", m.mean_L},             {"var_L", m.var_L}};
      j["chi2"] = {{"exponent", b.exponent}, {"bound", b.bound}, {"tv_bound", b.tv_bound}};
      if (samples > 0) {
        require(!prior_out.empty(), "--samples needs --out");
        std::ostringstream text;
        text.precision(17);
        for (std::size_t r = 0; r < samples; ++r) {
          const auto theta = sample_prior(p, l.vector, mix_seed(seed, r));
          for (std::size_t i = 0; i < theta.size(); ++i) {
            text << (i ? " " : "") << format_number(theta[i]);
          }
          text << "\n";
        }
        write_text(prior_out, text.str(), out);
        j["samples_file"] = prior_out;
      }
      stamp(j, inputs, seed);
      out << j.dump(2) << "\n";
      return 0;
    }

    if (simulate->parsed()) {
      std::ifstream f(config_path);
      require(static_cast<bool>(f), "cannot open '" + config_path + "'");
      std::stringstream text;
      text << f.rdbuf();
      SimConfig config = parse_config(text.str());
      if (app.get_option("--seed")->count() > 0) config.seed = seed;
      require(workers >= 0, "--workers must be >= 0");
      SimOptions options;
      options.workers = workers;
      if (sim_log) options.log = &err;
      const SimulationReport rep = risk_grid(config, options);
      std::string body;
      if (format == "json") {
        body = report_json(rep);
      } else {
        std::ostringstream os;
        write_csv(rep, os);
        body = os.str();
      }
      write_text(sim_out, body, out);
      return 0;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sparsefn::cli
