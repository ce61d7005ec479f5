#include "sparsefn/config.hpp"

#include <cmath>
#include <set>

#include "sparsefn/errors.hpp"
#include "sparsefn/stats.hpp"

namespace sparsefn {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw InputError((path.empty() ? "config" : path) + ": expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw InputError(join(path, item.key()) + ": unknown key");
    }
  }
}

const json* find(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw InputError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw InputError(path + ": must be finite");
  return x;
}

long long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw InputError(path + ": expected an integer");
  return v.get<long long>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw InputError(path + ": expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw InputError(path + ": expected an array");
  return v;
}

/// Runs a string-to-enum conversion and re-labels its error with the path.
template <class F>
auto named(const json& v, const std::string& path, F convert) {
  const std::string s = get_string(v, path);
  try {
    return convert(s);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void constraint(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw InputError(path + ": " + what);
}

LoadingSpec parse_loading(const json& j, const std::string& path) {
  check_object(j, path);
  const json* kind = find(j, "kind");
  if (!kind) throw InputError(join(path, "kind") + ": required");
  LoadingSpec spec;
  spec.kind = named(*kind, join(path, "kind"), loading_kind_from_string);
  switch (spec.kind) {
    case LoadingKind::explicit_values: {
      check_keys(j, path, {"kind", "values"});
      const json* vals = find(j, "values");
      if (!vals) throw InputError(join(path, "values") + ": required");
      const std::string vp = join(path, "values");
      for (std::size_t i = 0; i < get_array(*vals, vp).size(); ++i) {
        spec.values.push_back(get_number((*vals)[i], vp + "[" + std::to_string(i) + "]"));
      }
      constraint(!spec.values.empty(), vp, "must be non-empty");
      spec.d = spec.values.size();
      return spec;
    }
    case LoadingKind::homogeneous:
      check_keys(j, path, {"kind", "d"});
      break;
    case LoadingKind::two_phase:
      check_keys(j, path, {"kind", "d", "gamma_d", "gamma_lambda"});
      for (const char* key : {"gamma_d", "gamma_lambda"}) {
        if (!find(j, key)) throw InputError(join(path, key) + ": required");
      }
      spec.gamma_d = get_number(j["gamma_d"], join(path, "gamma_d"));
      spec.gamma_lambda = get_number(j["gamma_lambda"], join(path, "gamma_lambda"));
      constraint(spec.gamma_d > 0.0, join(path, "gamma_d"), "must be > 0");
      constraint(spec.gamma_lambda > 0.0, join(path, "gamma_lambda"), "must be > 0");
      break;
    case LoadingKind::exp_decay:
      check_keys(j, path, {"kind", "d", "c", "gamma"});
      if (const json* v = find(j, "c")) spec.c = get_number(*v, join(path, "c"));
      if (const json* v = find(j, "gamma")) spec.gamma = get_number(*v, join(path, "gamma"));
      constraint(spec.c >= 0.0, join(path, "c"), "must be >= 0");
      constraint(spec.gamma >= 1.0, join(path, "gamma"), "must be >= 1");
      break;
  }
  const json* d = find(j, "d");
  if (!d) throw InputError(join(path, "d") + ": required");
  const long long dv = get_integer(*d, join(path, "d"));
  constraint(dv >= 1, join(path, "d"), "must be >= 1");
  spec.d = static_cast<std::size_t>(dv);
  return spec;
}

NoiseModel parse_noise(const json& j, const std::string& path) {
  check_object(j, path);
  check_keys(j, path, {"family", "alpha", "tau", "class"});
  NoiseModel m;
  if (const json* v = find(j, "family")) m.family = named(*v, join(path, "family"), noise_family_from_string);
  if (const json* v = find(j, "alpha")) m.alpha = get_number(*v, join(path, "alpha"));
  if (const json* v = find(j, "tau")) m.tau = get_number(*v, join(path, "tau"));
  if (const json* v = find(j, "class")) m.noise_class = named(*v, join(path, "class"), noise_class_from_string);
  constraint(m.alpha > 0.0, join(path, "alpha"), "must be > 0");
  constraint(m.tau > 0.0, join(path, "tau"), "must be > 0");
  try {
    return NoiseModel::make(m.family, m.alpha, m.tau, m.noise_class);
  } catch (const InputError& e) {
    throw InputError(join(path, "class") + ": " + e.what());
  }
}

EstimatorBlock parse_estimator(const json& j, const std::string& path) {
  check_object(j, path);
  check_keys(j, path, {"variants", "s", "kappa", "zeta", "gamma_split", "c_H"});
  EstimatorBlock e;
  if (const json* v = find(j, "variants")) {
    const std::string vp = join(path, "variants");
    e.variants.clear();
    for (std::size_t i = 0; i < get_array(*v, vp).size(); ++i) {
      e.variants.push_back(named((*v)[i], vp + "[" + std::to_string(i) + "]", variant_from_string));
    }
    constraint(!e.variants.empty(), vp, "must be non-empty");
  }
  if (const json* v = find(j, "s")) {
    const long long s = get_integer(*v, join(path, "s"));
    constraint(s >= 1, join(path, "s"), "must be >= 1");
    e.s = static_cast<int>(s);
  }
  if (const json* v = find(j, "kappa")) e.kappa = get_number(*v, join(path, "kappa"));
  constraint(e.kappa > 0.0, join(path, "kappa"), "must be > 0");
  if (const json* v = find(j, "zeta")) {
    e.zeta = get_number(*v, join(path, "zeta"));
    constraint(*e.zeta > 0.0, join(path, "zeta"), "must be > 0");
  }
  if (const json* v = find(j, "gamma_split")) e.gamma_split = get_number(*v, join(path, "gamma_split"));
  constraint(e.gamma_split > 0.0 && e.gamma_split <= 0.5, join(path, "gamma_split"),
             "must lie in (0, 1/2]");
  if (const json* v = find(j, "c_H")) {
    e.c_H = get_number(*v, join(path, "c_H"));
    constraint(*e.c_H > 0.0, join(path, "c_H"), "must be > 0");
  }
  return e;
}

ThetaSpec parse_theta(const json& j, const std::string& path) {
  check_object(j, path);
  check_keys(j, path, {"kind", "s", "support", "magnitudes", "rho", "placement", "c1", "c_alpha2"});
  ThetaSpec t;
  if (const json* v = find(j, "kind")) t.kind = named(*v, join(path, "kind"), theta_kind_from_string);
  if (const json* v = find(j, "s")) {
    const long long s = get_integer(*v, join(path, "s"));
    constraint(s >= 1, join(path, "s"), "must be >= 1");
    t.s = static_cast<int>(s);
  }
  if (const json* v = find(j, "support")) {
    const std::string vp = join(path, "support");
    for (std::size_t i = 0; i < get_array(*v, vp).size(); ++i) {
      const std::string ip = vp + "[" + std::to_string(i) + "]";
      const long long idx = get_integer((*v)[i], ip);
      constraint(idx >= 1, ip, "indices are 1-based");
      t.support.push_back(static_cast<std::size_t>(idx - 1));
    }
  }
  if (const json* v = find(j, "magnitudes")) {
    const std::string vp = join(path, "magnitudes");
    for (std::size_t i = 0; i < get_array(*v, vp).size(); ++i) {
      t.magnitudes.push_back(get_number((*v)[i], vp + "[" + std::to_string(i) + "]"));
    }
  }
  if (const json* v = find(j, "rho")) t.rho = get_number(*v, join(path, "rho"));
  if (const json* v = find(j, "placement")) t.placement = named(*v, join(path, "placement"), placement_from_string);
  if (const json* v = find(j, "c1")) t.c1 = get_number(*v, join(path, "c1"));
  if (const json* v = find(j, "c_alpha2")) t.c_alpha2 = get_number(*v, join(path, "c_alpha2"));
  constraint(t.rho >= 0.0, join(path, "rho"), "must be >= 0");
  constraint(t.c1 > 0.0 && t.c1 < 2.0, join(path, "c1"), "must lie in (0, 2)");
  constraint(t.c_alpha2 > 0.0, join(path, "c_alpha2"), "must be > 0");
  if (t.kind == ThetaKind::fixed) {
    constraint(!t.support.empty(), join(path, "support"), "required for the fixed kind");
    constraint(t.magnitudes.size() == 1 || t.magnitudes.size() == t.support.size(),
               join(path, "magnitudes"), "needs one entry or one per support index");
    if (!find(j, "s")) t.s = static_cast<int>(t.support.size());
    constraint(static_cast<std::size_t>(t.s) == t.support.size(), join(path, "s"),
               "must equal the number of support indices for the fixed kind");
  }
  return t;
}

GridAxes parse_grid(const json& j, const std::string& path) {
  check_object(j, path);
  check_keys(j, path, {"d", "s", "alpha", "rho", "placement"});
  GridAxes g;
  auto each = [&](const char* key, auto fn) {
    if (const json* v = find(j, key)) {
      const std::string vp = join(path, key);
      for (std::size_t i = 0; i < get_array(*v, vp).size(); ++i) {
        fn((*v)[i], vp + "[" + std::to_string(i) + "]");
      }
    }
  };
  each("d", [&](const json& v, const std::string& p) {
    const long long d = get_integer(v, p);
    constraint(d >= 1, p, "must be >= 1");
    g.d.push_back(static_cast<std::size_t>(d));
  });
  each("s", [&](const json& v, const std::string& p) {
    const long long s = get_integer(v, p);
    constraint(s >= 1, p, "must be >= 1");
    g.s.push_back(static_cast<int>(s));
  });
  each("alpha", [&](const json& v, const std::string& p) {
    const double a = get_number(v, p);
    constraint(a > 0.0, p, "must be > 0");
    g.alpha.push_back(a);
  });
  each("rho", [&](const json& v, const std::string& p) {
    const double r = get_number(v, p);
    constraint(r >= 0.0, p, "must be >= 0");
    g.rho.push_back(r);
  });
  each("placement", [&](const json& v, const std::string& p) {
    g.placement.push_back(named(v, p, placement_from_string));
  });
  return g;
}

}  // namespace

SimConfig config_from_json(const json& j) {
  check_object(j, "");
  check_keys(j, "", {"schema_version", "seed", "loading", "noise", "sigma", "estimator", "theta",
                     "simulation"});
  SimConfig c;
  const json* version = find(j, "schema_version");
  if (!version) throw InputError("schema_version: required");
  c.schema_version = static_cast<int>(get_integer(*version, "schema_version"));
  constraint(c.schema_version == schema_version, "schema_version",
             "unsupported version (expected " + std::to_string(schema_version) + ")");
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw InputError("seed: expected a non-negative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }
  const json* loading = find(j, "loading");
  if (!loading) throw InputError("loading: required");
  c.loading = parse_loading(*loading, "loading");
  if (const json* v = find(j, "noise")) c.noise = parse_noise(*v, "noise");
  if (const json* v = find(j, "sigma")) c.sigma = get_number(*v, "sigma");
  constraint(c.sigma >= 0.0, "sigma", "must be >= 0");
  if (const json* v = find(j, "estimator")) c.estimator = parse_estimator(*v, "estimator");
  if (const json* v = find(j, "theta")) c.theta = parse_theta(*v, "theta");
  if (const json* v = find(j, "simulation")) {
    check_object(*v, "simulation");
    check_keys(*v, "simulation", {"replicates", "grid"});
    if (const json* r = find(*v, "replicates")) {
      const long long n = get_integer(*r, "simulation.replicates");
      constraint(n >= 1, "simulation.replicates", "must be >= 1");
      c.replicates = static_cast<int>(n);
    }
    if (const json* g = find(*v, "grid")) c.grid = parse_grid(*g, "simulation.grid");
  }
  constraint(c.grid.d.empty() || c.loading.kind != LoadingKind::explicit_values,
             "simulation.grid.d", "cannot sweep d with an explicit loading");
  // zeta follows alpha; with an alpha sweep it is resolved per cell instead.
  if (!c.estimator.zeta && c.grid.alpha.empty()) c.estimator.zeta = default_zeta(c.noise.alpha);
  return c;
}

SimConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const SimConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;

  json l;
  l["kind"] = to_string(c.loading.kind);
  switch (c.loading.kind) {
    case LoadingKind::explicit_values: l["values"] = c.loading.values; break;
    case LoadingKind::homogeneous: l["d"] = c.loading.d; break;
    case LoadingKind::two_phase:
      l["d"] = c.loading.d;
      l["gamma_d"] = c.loading.gamma_d;
      l["gamma_lambda"] = c.loading.gamma_lambda;
      break;
    case LoadingKind::exp_decay:
      l["d"] = c.loading.d;
      l["c"] = c.loading.c;
      l["gamma"] = c.loading.gamma;
      break;
  }
  j["loading"] = l;

  j["noise"] = {{"family", to_string(c.noise.family)},
                {"alpha", c.noise.alpha},
                {"tau", c.noise.tau},
                {"class", to_string(c.noise.noise_class)}};
  j["sigma"] = c.sigma;

  json e;
  e["variants"] = json::array();
  for (Variant v : c.estimator.variants) e["variants"].push_back(to_string(v));
  e["s"] = c.estimator.s ? json(*c.estimator.s) : json(nullptr);
  e["kappa"] = c.estimator.kappa;
  e["zeta"] = c.estimator.zeta ? json(*c.estimator.zeta) : json(nullptr);
  e["gamma_split"] = c.estimator.gamma_split;
  e["c_H"] = c.estimator.c_H ? json(*c.estimator.c_H) : json(nullptr);
  j["estimator"] = e;

  json t;
  t["kind"] = to_string(c.theta.kind);
  t["s"] = c.theta.s;
  t["support"] = json::array();
  for (std::size_t i : c.theta.support) t["support"].push_back(i + 1);
  t["magnitudes"] = c.theta.magnitudes;
  t["rho"] = c.theta.rho;
  t["placement"] = to_string(c.theta.placement);
  t["c1"] = c.theta.c1;
  t["c_alpha2"] = c.theta.c_alpha2;
  j["theta"] = t;

  json g;
  g["d"] = c.grid.d;
  g["s"] = c.grid.s;
  g["alpha"] = c.grid.alpha;
  g["rho"] = c.grid.rho;
  g["placement"] = json::array();
  for (Placement p : c.grid.placement) g["placement"].push_back(to_string(p));
  j["simulation"] = {{"replicates", c.replicates}, {"grid", g}};
  return j;
}

std::string serialize_config(const SimConfig& config) { return config_to_json(config).dump(); }

std::string config_hash(const SimConfig& config) {
  return hex64(fnv1a64(serialize_config(config)));
}

}  // namespace sparsefn
