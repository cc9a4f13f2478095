#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netmon/cli_reports.hpp"
#include "netmon/error.hpp"

using namespace netmon::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("netmon_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunOptions opts(json config, const fs::path& out) {
  RunOptions o;
  o.config = std::move(config);
  o.out_dir = out.string();
  return o;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(NETMON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("solve reproduces the model values") {
  const fs::path dir = scratch("solve");
  const RunResult r = cmd_solve(opts(json{{"model", {{"n", 2}}}}, dir));
  CHECK(r.summary.at("decentralized").at("welfare") == doctest::Approx(4.0));
  CHECK(r.summary.at("decentralized").at("mu_star") == doctest::Approx(2.0));
  CHECK(r.summary.at("welfare_gap").get<double>() > 0.0);
  const json back = json::parse(slurp(dir / "solve.json"));
  CHECK(back == r.summary);
  CHECK_THROWS_AS(cmd_solve(opts(json{{"model", {{"lambda_c", 1.0}}}}, dir)), netmon::DomainError);
  CHECK_THROWS_AS(cmd_solve(opts(json{{"model", {{"lamda_c", 0.3}}}}, dir)), netmon::DomainError);
}

TEST_CASE("threshold curve and classification") {
  const fs::path dir = scratch("threshold");
  const RunResult r = cmd_threshold(opts(json{{"threshold", {{"n_values", {2, 3, 5}}}}}, dir));
  const auto& curve = r.summary.at("lambda_star_curve");
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].at("lambda_star").get<double>() == doctest::Approx(1 - 1 / (-1 + std::sqrt(5.0))).epsilon(1e-9));
  const std::string tsv = slurp(dir / "lambda_star.tsv");
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);

  RunOptions pu = opts(json{{"model", {{"k_c", 50.0}, {"lambda_c", 0.2}}}}, dir);
  pu.cost_mode = "per_unit";
  const RunResult p = cmd_threshold(pu);
  CHECK(p.summary.at("n_star").at("kind") == "centralize_above");
  CHECK(p.summary.at("n_star").at("n_star").get<double>() == doctest::Approx(16.0));

  const RunResult below = cmd_threshold(opts(json{{"model", {{"lambda_c", 0.29}}}}, dir));
  CHECK(below.summary.at("n_star").at("kind") == "centralize_below");
  CHECK_FALSE(below.summary.at("warnings").empty());
}

TEST_CASE("spectral summaries") {
  const fs::path dir = scratch("spectral");
  const RunResult mf = cmd_spectral(
      opts(json{{"graph", {{"kind", "mean_field"}, {"n", 5}}}, {"spectral", {{"lambda_d", 0.0}, {"lambda_c", 0.5}}}},
           dir));
  CHECK(mf.summary.at("centralized").at("s").get<double>() == doctest::Approx(10.0));
  CHECK(mf.summary.at("psi").get<double>() == doctest::Approx(1.0));
  const RunResult k4 = cmd_spectral(opts(json{{"graph", {{"kind", "complete"}, {"n", 4}}},
                                              {"spectral", {{"lambda_c", 0.2}}}},
                                         dir));
  CHECK(k4.summary.at("psi").get<double>() == doctest::Approx(3.0));
  CHECK_THROWS_AS(cmd_spectral(opts(json::object(), dir)), netmon::DomainError);

  const RunResult kap = cmd_spectral(opts(json{{"graph", {{"kind", "complete"}, {"n", 10}, {"weight", 0.1}}},
                                               {"spectral", {{"lambda_c", 0.4}, {"kappa_lo", 1e-5}, {"kappa_hi", 2.7}}}},
                                          dir));
  CHECK(std::abs(kap.summary.at("kappa").at("residual").get<double>()) <= 1e-8);
}

TEST_CASE("simulate is reproducible") {
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  const json cfg{{"seed", 17}, {"simulate", {{"reps", 2000}}}};
  const RunResult ra = cmd_simulate(opts(cfg, a));
  RunOptions ob = opts(cfg, b);
  ob.threads = 3;
  cmd_simulate(ob);
  CHECK(slurp(a / "simulate.json") == slurp(b / "simulate.json"));
  CHECK(slurp(a / "amplification.tsv") == slurp(b / "amplification.tsv"));
  CHECK(ra.summary.at("relative_error").get<double>() < 0.05);

  std::istringstream tsv(slurp(a / "amplification.tsv"));
  std::string line;
  std::getline(tsv, line);
  double prev = -1;
  while (std::getline(tsv, line)) {
    std::istringstream row(line);
    double lambda = 0, variance = 0;
    row >> lambda >> variance;
    if (lambda >= 0.05) {
      CHECK(variance > prev);
      prev = variance;
    }
  }
}

TEST_CASE("seed precedence") {
  RunOptions o;
  ::unsetenv("NETMON_SEED");
  CHECK(resolve_seed(o) == kDefaultSeed);
  ::setenv("NETMON_SEED", "55", 1);
  CHECK(resolve_seed(o) == 55);
  o.config = json{{"seed", 66}};
  CHECK(resolve_seed(o) == 66);
  o.seed = 77;
  CHECK(resolve_seed(o) == 77);
  ::setenv("NETMON_SEED", "abc", 1);
  o = RunOptions{};
  CHECK_THROWS_AS(resolve_seed(o), netmon::DomainError);
  ::unsetenv("NETMON_SEED");
}

TEST_CASE("gen and analyze produce a hashed bundle") {
  const fs::path gen_a = scratch("gen_a");
  const fs::path gen_b = scratch("gen_b");
  const json cfg{{"seed", 3}, {"generator", {{"n_facilities", 3000}}}};
  const RunResult g = cmd_gen(opts(cfg, gen_a));
  cmd_gen(opts(cfg, gen_b));
  CHECK(slurp(gen_a / "panel.csv") == slurp(gen_b / "panel.csv"));
  CHECK(g.summary.at("rows") == 3000);
  const std::string csv = slurp(gen_a / "panel.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3001);

  const fs::path out = scratch("analyze");
  json acfg{{"analyze", {{"panel", (gen_a / "panel.csv").string()}, {"bootstrap_reps", 99}}}};
  const RunResult a = cmd_analyze(opts(acfg, out));
  const json manifest = json::parse(slurp(a.manifest_path));
  CHECK(manifest.at("subcommand") == "analyze");
  CHECK(manifest.at("outputs").size() == a.outputs.size());
  for (const auto& f : manifest.at("outputs")) {
    const fs::path p = out / f.at("file").get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(f.at("sha256") == sha256_file(p.string()));
    CHECK(f.at("bytes") == fs::file_size(p));
  }
  for (const char* name : {"spillover.csv", "break_county.json", "f_profile_county.tsv", "placebo.json",
                           "variance_by_threshold.csv", "deterioration.csv", "report.json"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(a.summary.at("break_county").contains("result"));
}

TEST_CASE("analyze rejects a panel without required columns") {
  const fs::path dir = scratch("bad_panel");
  write_file(dir / "panel.csv", "facility_id,county_fips\nF1,01001\n");
  try {
    cmd_analyze(opts(json{{"analyze", {{"panel", (dir / "panel.csv").string()}}}}, dir / "out"));
    FAIL("expected a validation error");
  } catch (const netmon::DomainError& e) {
    CHECK(std::string(e.what()).find("chain_id") != std::string::npos);
    CHECK(exit_code(e) == 2);
  }
  CHECK_THROWS_AS(cmd_analyze(opts(json::object(), dir)), netmon::DomainError);
  CHECK_THROWS_AS(cmd_analyze(opts(json{{"analyze", {{"panel", "/nonexistent.csv"}}}}, dir)), netmon::IoError);
}

TEST_CASE("sha256 of a known string") {
  const fs::path dir = scratch("sha");
  write_file(dir / "abc.txt", "abc");
  CHECK(sha256_file((dir / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("binary exit codes") {
  const fs::path dir = scratch("binary");
  CHECK(run_binary("solve --out " + (dir / "ok").string()) == 0);
  write_file(dir / "bad.json", R"({"model": {"lambda_c": 1.5}})");
  CHECK(run_binary("solve --config " + (dir / "bad.json").string() + " --out " + dir.string()) == 2);
  write_file(dir / "nograph.json", "{}");
  CHECK(run_binary("spectral --config " + (dir / "nograph.json").string() + " --out " + dir.string()) == 2);
  write_file(dir / "bound.json", R"({"graph": {"kind": "complete", "n": 4}, "spectral": {"lambda_c": 0.5}})");
  CHECK(run_binary("spectral --config " + (dir / "bound.json").string() + " --out " + dir.string()) == 3);
  CHECK(run_binary("solve --config /nonexistent/config.json --out " + dir.string()) == 4);
  CHECK(run_binary("solve --bogus-flag") == 2);
  CHECK(run_binary("solve --cost-mode sideways --out " + dir.string()) == 2);
  CHECK(fs::exists(dir / "ok" / "manifest.json"));
}
