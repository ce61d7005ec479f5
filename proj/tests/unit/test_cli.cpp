#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsefn/cli.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = sparsefn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "sparsefn_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << content;
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_provenance(const json& j) {
  CHECK(j.contains("tool_version"));
  CHECK(j.contains("config_hash"));
  CHECK(j.contains("seed"));
}

}  // namespace

TEST_CASE("solve reports the homogeneous root", "[cli]") {
  const auto r = run_cli({"solve", "--loading-spec", "homogeneous", "--d", "100", "--alpha", "2", "--s", "5"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK_THAT(j["beta"].get<double>(), WithinAbs(2.772589, 1e-6));
  CHECK_THAT(j["lambda"].get<double>(), WithinRel(1.6651092223153955, 1e-9));
  check_provenance(j);

  const auto same = run_cli({"solve", "--loading-spec", "homogeneous", "--d", "100", "--alpha", "2", "--s", "5"});
  CHECK(same.out == r.out);
  const auto other = run_cli({"solve", "--loading-spec", "homogeneous", "--d", "101", "--alpha", "2", "--s", "5"});
  CHECK(json::parse(other.out)["config_hash"] != j["config_hash"]);

  const auto asym = run_cli({"solve", "--equation", "asym", "--loading-spec", "homogeneous", "--d", "110",
                             "--alpha", "1", "--s", "10"});
  REQUIRE(asym.code == 0);
  CHECK_THAT(json::parse(asym.out)["lambda"].get<double>(), WithinRel(std::log(1.1), 1e-9));
}

TEST_CASE("estimate reports 1-based kept indices", "[cli]") {
  const auto y = write_file("y3.txt", "4.0\n1.0\n-0.5\n");
  const auto r = run_cli({"estimate", "--variant", "oracle", "--loading-spec", "homogeneous", "--d", "3",
                          "--s", "1", "--sigma", "1", "--y-file", y});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["value"].get<double>() == 4.0);
  CHECK(j["kept_indices"] == json::array({1}));
  CHECK_THAT(j["threshold"].get<double>(), WithinRel(3.152717335752129, 1e-9));
  check_provenance(j);

  const auto adp = run_cli({"estimate", "--variant", "adaptive", "--loading-spec", "homogeneous", "--d", "3",
                            "--sigma", "1", "--zeta", "100", "--y-file",
                            write_file("ya.txt", "0.1\n-0.2\n0.15\n")});
  REQUIRE(adp.code == 0);
  const json ja = json::parse(adp.out);
  CHECK(ja["lepski"]["s_hat"] == 1);

  const auto unk = run_cli({"estimate", "--variant", "unknown-sigma", "--sigma-unknown", "--loading-spec",
                            "homogeneous", "--d", "8", "--s", "1", "--y-file",
                            write_file("y8.txt", "5\n0.1\n-0.1\n0.1\n-0.1\n0.1\n-0.1\n0.1\n")});
  REQUIRE(unk.code == 0);
  CHECK(json::parse(unk.out)["value"].get<double>() == 5.0);
}

TEST_CASE("drop-zeros maps observations through the kept loadings", "[cli]") {
  const auto load = write_file("eta0.txt", "1\n0\n1\n1\n");
  const auto y = write_file("y4.txt", "0.5\n100\n-1\n2\n");
  const auto rejected = run_cli({"estimate", "--variant", "plug-in", "--loading-file", load, "--sigma", "1",
                                 "--y-file", y});
  CHECK(rejected.code == 1);
  CHECK_THAT(rejected.err, ContainsSubstring("drop-zeros"));
  const auto r = run_cli({"estimate", "--variant", "plug-in", "--loading-file", load, "--drop-zeros",
                          "--sigma", "1", "--y-file", y});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["value"].get<double>() == 1.5);
  CHECK(j["kept_indices"] == json::array({1, 3, 4}));
}

TEST_CASE("input errors exit with status 1", "[cli]") {
  const auto load = write_file("eta_bad.txt", "1\n2\n1\n");
  const auto y = write_file("y_bad.txt", "1\n1\n1\n");
  const auto collier = run_cli({"estimate", "--variant", "collier", "--loading-file", load, "--s", "1",
                                "--sigma", "1", "--y-file", y});
  CHECK(collier.code == 1);
  CHECK_THAT(collier.err, ContainsSubstring("homogeneous"));

  CHECK(run_cli({"solve", "--loading-spec", "homogenous", "--d", "4"}).code == 1);
  CHECK(run_cli({"solve", "--loading-spec", "homogeneous", "--d", "4", "--s", "9"}).code == 1);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"estimate", "--variant", "oracle", "--loading-spec", "homogeneous", "--d", "3", "--sigma",
                 "1", "--y-file", (scratch_dir() / "missing.txt").string()})
            .code == 1);
}

TEST_CASE("help lists flags with defaults", "[cli]") {
  const auto r = run_cli({"estimate", "--help"});
  CHECK(r.code == 0);
  const std::string text = r.out + r.err;
  for (const char* flag : {"--variant", "--s", "--alpha", "--tau", "--sigma", "--kappa", "--zeta",
                           "--gamma-split", "--y-file", "--loading-spec"}) {
    CHECK_THAT(text, ContainsSubstring(flag));
  }
  CHECK_THAT(text, ContainsSubstring("[0.5]"));
}

TEST_CASE("rate CSV has the documented columns", "[cli]") {
  const auto r = run_cli({"rate", "--loading-spec", "homogeneous", "--d", "100", "--alpha", "2", "--s", "1,5",
                          "--csv"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# tool_version=", 0) == 0);
  std::getline(in, line);
  CHECK(line == "s,beta,lambda_o,nu,j1,phi_o,lambda_star,nu_star,phi_star,phi_adp,closed_form,ratio");
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 2);

  const auto js = run_cli({"rate", "--loading-spec", "homogeneous", "--d", "100", "--alpha", "2", "--s", "5"});
  REQUIRE(js.code == 0);
  CHECK_THAT(json::parse(js.out).dump(), ContainsSubstring("117.19244861387"));
}

TEST_CASE("test subcommand", "[cli]") {
  std::string y = "20\n";
  for (int i = 1; i < 100; ++i) y += "0\n";
  const auto path = write_file("y100.txt", y);
  const auto r = run_cli({"test", "--loading-spec", "homogeneous", "--d", "100", "--s", "5", "--sigma", "1",
                          "--t0", "0", "--B", "1", "--y-file", path});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["decision"] == 1);
  CHECK(j["statistic"].get<double>() == 20.0);
  CHECK_THAT(j["threshold"].get<double>(), WithinRel(std::sqrt(117.19244861387942), 1e-9));
  CHECK(run_cli({"test", "--loading-spec", "homogeneous", "--d", "100", "--s", "5", "--sigma", "1", "--t0",
                 "0", "--y-file", path})
            .code == 1);
}

TEST_CASE("prior subcommand", "[cli]") {
  const auto out = (scratch_dir() / "theta.txt").string();
  const auto r = run_cli({"--seed", "4", "prior", "--loading-spec", "homogeneous", "--d", "100", "--alpha", "2",
                          "--s", "5", "--c1", "1", "--samples", "3", "--out", out});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK_THAT(j["moments"]["mean_support"].get<double>(), WithinRel(2.5, 1e-9));
  CHECK(j["seed"] == 4);
  std::istringstream lines(read_file(out));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) n += !line.empty();
  CHECK(n == 3);
}

TEST_CASE("simulate is byte-identical across worker counts", "[cli]") {
  const auto cfg = write_file("sim.json", R"({
    "schema_version": 1, "seed": 5,
    "loading": {"kind": "homogeneous", "d": 50},
    "estimator": {"variants": ["oracle", "adaptive"]},
    "theta": {"kind": "spike_grid", "s": 2},
    "simulation": {"replicates": 100, "grid": {"rho": [0.5, 1.0]}}
  })");
  const auto a = (scratch_dir() / "a.csv").string();
  const auto b = (scratch_dir() / "b.csv").string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", a, "--workers", "1"}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", b, "--workers", "3"}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK_THAT(read_file(a), ContainsSubstring("rho,estimator,n_rep,mse,mse_se,rate_kind,rate_value,ratio"));

  const auto j = run_cli({"simulate", "--config", cfg, "--format", "json"});
  REQUIRE(j.code == 0);
  check_provenance(json::parse(j.out));

  const auto bad = write_file("bad.json", R"({"schema_version": 1, "loading": {"kind": "homogeneus", "d": 4}})");
  const auto r = run_cli({"simulate", "--config", bad});
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("loading.kind"));
}
