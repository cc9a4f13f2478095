#include "netmon/cli_reports.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "netmon/econometrics.hpp"
#include "netmon/error.hpp"
#include "netmon/game_core.hpp"
#include "netmon/network_spectral.hpp"
#include "netmon/panel.hpp"
#include "netmon/rng.hpp"
#include "netmon/stochastic_sim.hpp"
#include "netmon/synthetic_data.hpp"

#ifndef NETMON_VERSION
#define NETMON_VERSION "0.0.0"
#endif

namespace netmon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return NETMON_VERSION; }

int exit_code(const std::exception& e) {
  if (dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const json::exception*>(&e)) return 2;
  return 1;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw DomainError("config '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw DomainError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

namespace {

json section(const RunOptions& o, const std::string& name) {
  if (!o.config.contains(name)) return json::object();
  const json& s = o.config.at(name);
  if (!s.is_object()) throw DomainError("config section '" + name + "' must be an object");
  return s;
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw DomainError("config section '" + where + "': unknown field '" + key + "'");
  }
}

template <typename T>
T field(const json& j, const std::string& where, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw DomainError("config section '" + where + "': field '" + name + "' has the wrong type");
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("NETMON_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(s);
  } catch (const std::exception&) {
    throw DomainError(std::string("NETMON_SEED is not an unsigned integer: '") + v + "'");
  }
}

game::ModelParams model_params(const RunOptions& o) {
  const json s = section(o, "model");
  reject_unknown(s, "model", {"phi", "k_d", "k_c", "lambda_d", "lambda_c", "n", "cost_mode"});
  game::ModelParams p;
  p.phi = field(s, "model", "phi", p.phi);
  p.k_d = field(s, "model", "k_d", p.k_d);
  p.k_c = field(s, "model", "k_c", p.k_c);
  p.lambda_d = field(s, "model", "lambda_d", p.lambda_d);
  p.lambda_c = field(s, "model", "lambda_c", p.lambda_c);
  p.n = field(s, "model", "n", p.n);
  p.cost_mode = game::cost_mode_from_string(field<std::string>(s, "model", "cost_mode", "global"));
  if (o.cost_mode) p.cost_mode = game::cost_mode_from_string(*o.cost_mode);
  return p;
}

json to_json(const game::ModelParams& p) {
  return json{{"phi", p.phi},           {"k_d", p.k_d}, {"k_c", p.k_c},
              {"lambda_d", p.lambda_d}, {"lambda_c", p.lambda_c}, {"n", p.n},
              {"cost_mode", game::to_string(p.cost_mode)}};
}

json to_json(const game::RegimeSolution& s) {
  return json{{"effort", s.effort}, {"mu_star", s.mu_star}, {"welfare", s.welfare}};
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Collects output files and writes the manifest last.
class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory '" + dir_ + "'");
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    names_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  RunResult finish(const std::string& subcommand, const json& effective, std::uint64_t seed, json summary) {
    json files = json::array();
    for (const auto& name : names_) {
      const fs::path path = fs::path(dir_) / name;
      files.push_back({{"file", name}, {"sha256", sha256_file(path.string())}, {"bytes", fs::file_size(path)}});
    }
    const json manifest{{"tool", "netmon"},   {"version", version()}, {"subcommand", subcommand},
                        {"seed", seed},        {"config", effective}, {"outputs", files}};
    const fs::path path = fs::path(dir_) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    return RunResult{std::move(summary), names_, path.string()};
  }

 private:
  std::string dir_;
  std::vector<std::string> names_;
};

spectral::Graph graph_from(const json& g) {
  if (g.contains("edge_list")) {
    reject_unknown(g, "graph", {"edge_list"});
    return spectral::read_edge_list(g.at("edge_list").get<std::string>());
  }
  spectral::GraphSpec spec;
  try {
    spec = g.get<spectral::GraphSpec>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("config section 'graph': ") + e.what());
  }
  return spectral::make_graph(spec);
}

}  // namespace

std::uint64_t resolve_seed(const RunOptions& o) {
  if (o.seed) return *o.seed;
  if (o.config.contains("seed")) {
    try {
      return o.config.at("seed").get<std::uint64_t>();
    } catch (const json::exception&) {
      throw DomainError("config field 'seed' must be an unsigned integer");
    }
  }
  if (const auto s = env_seed()) return *s;
  return kDefaultSeed;
}

RunResult cmd_solve(const RunOptions& o) {
  const game::ModelParams p = model_params(o);
  p.validate();
  const auto central = game::solve_regime(p, game::Regime::centralized);
  const auto decentral = game::solve_regime(p, game::Regime::decentralized);
  const double gap = central.welfare - decentral.welfare;
  json out{{"params", to_json(p)},
           {"centralized", to_json(central)},
           {"decentralized", to_json(decentral)},
           {"welfare_gap", gap},
           {"preferred", gap > 0.0 ? "centralized" : (gap < 0.0 ? "decentralized" : "indifferent")}};
  Outputs files(o.out_dir);
  files.write_json("solve.json", out);
  return files.finish("solve", json{{"model", to_json(p)}}, resolve_seed(o), out);
}

RunResult cmd_threshold(const RunOptions& o) {
  game::ModelParams p = model_params(o);
  const json s = section(o, "threshold");
  reject_unknown(s, "threshold", {"n_values", "n_max"});
  std::vector<int> n_values;
  for (int n = 2; n <= 20; ++n) n_values.push_back(n);
  n_values = field(s, "threshold", "n_values", n_values);
  const int n_max = field(s, "threshold", "n_max", game::kDefaultNMax);
  if (n_values.empty()) throw DomainError("threshold: n_values is empty");

  json curve = json::array();
  std::string tsv = "n\tlambda_star\n";
  for (int n : n_values) {
    game::ModelParams q = p;
    q.n = n;
    q.validate_without_lambda_c();
    json row{{"n", n}};
    try {
      const double ls = game::lambda_star(q);
      row["lambda_star"] = ls;
      tsv += std::to_string(n) + "\t" + format_double(ls) + "\n";
    } catch (const NumericalError& e) {
      row["lambda_star"] = nullptr;
      row["note"] = e.what();
      tsv += std::to_string(n) + "\tNA\n";
    }
    curve.push_back(row);
  }

  p.validate();
  const game::NStarClassification c = game::n_star(p, n_max);
  json classification{{"kind", game::to_string(c.kind)},
                      {"linear_coef", c.linear_coef},
                      {"quadratic_coef", c.quadratic_coef},
                      {"lambda_c", p.lambda_c},
                      {"scan_max", n_max}};
  if (c.kind == game::NStarKind::centralize_above || c.kind == game::NStarKind::centralize_below) {
    classification["n_star"] = c.n_star;
  }
  json warnings = json::array();
  if (p.cost_mode == game::CostMode::global && c.kind == game::NStarKind::centralize_below) {
    warnings.push_back(
        "global cost mode makes decentralized welfare quadratic in n, so centralization wins only below n*; "
        "per_unit cost mode gives the affine accounting under which centralization wins above n*");
  }
  json out{{"params", to_json(p)}, {"lambda_star_curve", curve}, {"n_star", classification}, {"warnings", warnings}};
  Outputs files(o.out_dir);
  files.write_json("threshold.json", out);
  files.write("lambda_star.tsv", tsv);
  json effective{{"model", to_json(p)}, {"threshold", {{"n_values", n_values}, {"n_max", n_max}}}};
  return files.finish("threshold", effective, resolve_seed(o), out);
}

RunResult cmd_spectral(const RunOptions& o) {
  if (!o.config.contains("graph")) throw DomainError("spectral: config needs a 'graph' section");
  json graph_json = section(o, "graph");
  if (!graph_json.contains("edge_list") && !graph_json.contains("seed")) graph_json["seed"] = resolve_seed(o);
  const spectral::Graph g = graph_from(graph_json);

  const json s = section(o, "spectral");
  reject_unknown(s, "spectral", {"phi", "k_d", "k_c", "lambda_d", "lambda_c", "kappa_lo", "kappa_hi", "kappa_grid"});
  spectral::SpectralParams sp;
  sp.phi = field(s, "spectral", "phi", sp.phi);
  sp.k_d = field(s, "spectral", "k_d", sp.k_d);
  sp.k_c = field(s, "spectral", "k_c", sp.k_c);
  sp.lambda_d = field(s, "spectral", "lambda_d", sp.lambda_d);
  sp.lambda_c = field(s, "spectral", "lambda_c", sp.lambda_c);
  if (!(sp.phi > 0.0 && sp.k_d > 0.0 && sp.k_c >= sp.k_d)) throw DomainError("spectral: need phi > 0 and 0 < k_d <= k_c");
  if (!(sp.lambda_d >= 0.0 && sp.lambda_d < sp.lambda_c)) throw DomainError("spectral: need 0 <= lambda_d < lambda_c");

  const double psi = spectral::spectral_radius(g);
  const auto central = spectral::spectral_welfare(g, sp.lambda_c, sp.k_c, sp.phi);
  const auto decentral = spectral::spectral_welfare(g, sp.lambda_d, sp.k_d, sp.phi);
  const double sbar = spectral::s_bar(decentral.s_value, sp.phi, sp.k_c, sp.k_d);
  json out{{"n", g.n()},
           {"irreducible", spectral::is_irreducible(g)},
           {"psi", psi},
           {"centralized", {{"lambda", sp.lambda_c}, {"s", central.s_value}, {"mu_star", central.mu_star}, {"welfare", central.welfare}}},
           {"decentralized", {{"lambda", sp.lambda_d}, {"s", decentral.s_value}, {"mu_star", decentral.mu_star}, {"welfare", decentral.welfare}}},
           {"s_bar", sbar},
           {"centralize", central.s_value > sbar}};
  if (s.contains("kappa_lo") || s.contains("kappa_hi")) {
    const double lo = field(s, "spectral", "kappa_lo", 0.0);
    const double hi = field(s, "spectral", "kappa_hi", 0.0);
    const int grid = field(s, "spectral", "kappa_grid", 64);
    const Eigen::MatrixXd base = g.weights();
    const spectral::GraphFamily family = [base](double kappa) {
      return spectral::Graph::from_weights(kappa * base);
    };
    const auto k = spectral::kappa_star(family, sp, lo, hi, grid);
    out["kappa"] = {{"family", "input graph weights scaled by kappa"}, {"lo", lo}, {"hi", hi},
                    {"kappa_star", k.kappa_star}, {"psi_star", k.psi_star}, {"residual", k.welfare_gap}};
  }
  Outputs files(o.out_dir);
  files.write_json("spectral.json", out);
  json effective{{"graph", graph_json}, {"spectral", s}};
  return files.finish("spectral", effective, resolve_seed(o), out);
}

RunResult cmd_simulate(const RunOptions& o) {
  const std::uint64_t seed = resolve_seed(o);
  json graph_json = o.config.contains("graph") ? section(o, "graph") : json{{"kind", "mean_field"}, {"n", 50}};
  if (!graph_json.contains("edge_list") && !graph_json.contains("seed")) graph_json["seed"] = seed;

  stochastic::ShockSpec spec;
  spec.graph = graph_from(graph_json);
  const json sh = section(o, "shock");
  reject_unknown(sh, "shock", {"sigma2", "rho", "tau2", "gamma", "omega2", "theta_bar", "lambda", "phi"});
  spec.sigma2 = field(sh, "shock", "sigma2", spec.sigma2);
  spec.rho = field(sh, "shock", "rho", spec.rho);
  spec.tau2 = field(sh, "shock", "tau2", spec.tau2);
  spec.gamma = field(sh, "shock", "gamma", spec.gamma);
  spec.omega2 = field(sh, "shock", "omega2", spec.omega2);
  spec.theta_bar = field(sh, "shock", "theta_bar", spec.theta_bar);
  spec.lambda = field(sh, "shock", "lambda", 0.8);
  spec.phi = field(sh, "shock", "phi", spec.phi);
  spec.validate();

  const json sim = section(o, "simulate");
  reject_unknown(sim, "simulate", {"mu", "reps", "lambda_grid", "rule"});
  const double mu = field(sim, "simulate", "mu", 0.0);
  const int reps = field(sim, "simulate", "reps", 20000);
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  grid = field(sim, "simulate", "lambda_grid", grid);
  const auto rule = stochastic::effort_rule_from_string(field<std::string>(sim, "simulate", "rule", "decentralized_plugin"));

  const stochastic::SimResult result = stochastic::monte_carlo_variance(spec, mu, reps, seed, o.threads);
  json out = result;
  out["n"] = spec.graph.n();
  out["lambda"] = spec.lambda;
  out["sigma2"] = spec.sigma2;
  const std::string kind = graph_json.value("kind", "");
  if ((kind == "mean_field" || kind == "complete") && spec.rho == 0.0 && spec.graph.n() >= 2) {
    const double closed = stochastic::effort_variance_closed_form(spec.graph.n(), spec.lambda, spec.sigma2);
    out["closed_form"] = closed;
    out["relative_error"] = std::abs(result.cross_var - closed) / closed;
  }

  std::optional<game::ModelParams> model;
  if (o.config.contains("model")) model = model_params(o);
  const auto profile = stochastic::amplification_profile(spec, grid, rule, model);
  out["rule"] = stochastic::to_string(rule);
  if (profile.lambda_star) out["lambda_star"] = *profile.lambda_star;

  Outputs files(o.out_dir);
  files.write_json("simulate.json", out);
  files.write("amplification.tsv", stochastic::to_tsv(profile));
  json effective{{"graph", graph_json},
                 {"shock", {{"sigma2", spec.sigma2}, {"rho", spec.rho}, {"tau2", spec.tau2}, {"gamma", spec.gamma},
                            {"omega2", spec.omega2}, {"theta_bar", spec.theta_bar}, {"lambda", spec.lambda}, {"phi", spec.phi}}},
                 {"simulate", {{"mu", mu}, {"reps", reps}, {"lambda_grid", grid}, {"rule", stochastic::to_string(rule)}}},
                 {"threads", o.threads}};
  if (model) effective["model"] = to_json(*model);
  return files.finish("simulate", effective, seed, out);
}

namespace {

data::GeneratorConfig generator_config(const RunOptions& o) {
  data::GeneratorConfig cfg;
  const json s = section(o, "generator");
  from_json(s, cfg);
  if (o.seed || o.config.contains("seed") || !s.contains("seed")) cfg.seed = resolve_seed(o);
  if (o.county_cutoff) cfg.county_cutoff = *o.county_cutoff;
  if (o.chain_cutoff) cfg.chain_cutoff = *o.chain_cutoff;
  return cfg;
}

}  // namespace

RunResult cmd_gen(const RunOptions& o) {
  const data::GeneratorConfig cfg = generator_config(o);
  const data::GeneratedPanel g = data::generate(cfg);
  Outputs files(o.out_dir);
  files.write("panel.csv", data::to_csv(g.panel));
  files.write_json("truth.json", g.truth);
  json out{{"rows", g.panel.size()}, {"truth", g.truth}};
  return files.finish("gen", json{{"generator", cfg}}, cfg.seed, out);
}

namespace {

struct AnalyzeSettings {
  std::string panel_path;
  int county_cutoff = 7;
  int chain_cutoff = 34;
  int bootstrap_reps = 199;
  std::vector<std::string> spillover_outcomes{"overall_rating", "staffing_rating", "def_total"};
  std::vector<std::string> variance_outcomes{"overall_rating", "staffing_rating", "def_total"};
  econ::LeveneCenter center = econ::LeveneCenter::mean;
  bool state_fe = true;
};

AnalyzeSettings analyze_settings(const RunOptions& o) {
  const json s = section(o, "analyze");
  reject_unknown(s, "analyze", {"panel", "county_cutoff", "chain_cutoff", "bootstrap_reps", "spillover_outcomes",
                                "variance_outcomes", "levene_center", "state_fe"});
  AnalyzeSettings a;
  if (!s.contains("panel")) throw DomainError("analyze: config section 'analyze' needs a 'panel' path");
  a.panel_path = field<std::string>(s, "analyze", "panel", "");
  a.county_cutoff = o.county_cutoff.value_or(field(s, "analyze", "county_cutoff", a.county_cutoff));
  a.chain_cutoff = o.chain_cutoff.value_or(field(s, "analyze", "chain_cutoff", a.chain_cutoff));
  a.bootstrap_reps = field(s, "analyze", "bootstrap_reps", a.bootstrap_reps);
  a.spillover_outcomes = field(s, "analyze", "spillover_outcomes", a.spillover_outcomes);
  a.variance_outcomes = field(s, "analyze", "variance_outcomes", a.variance_outcomes);
  a.state_fe = field(s, "analyze", "state_fe", a.state_fe);
  const std::string center = field<std::string>(s, "analyze", "levene_center", "mean");
  if (center == "mean") a.center = econ::LeveneCenter::mean;
  else if (center == "median") a.center = econ::LeveneCenter::median;
  else throw DomainError("analyze: levene_center must be mean or median");
  if (a.county_cutoff < 1 || a.chain_cutoff < 1) throw DomainError("analyze: cutoffs must be >= 1");
  return a;
}

Eigen::MatrixXd controls_of(const econ::GroupTable& t, const std::vector<std::string>& names) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.ids.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = t.vector(names[j]);
  return m;
}

// Position of c_hat within the candidate range, 0 = lower bound.
double relative_position(const econ::BreakResult& r) {
  const double lo = r.f_profile.front().first;
  const double hi = r.f_profile.back().first;
  return hi > lo ? (r.c_hat - lo) / (hi - lo) : 0.0;
}

}  // namespace

RunResult cmd_analyze(const RunOptions& o) {
  const AnalyzeSettings a = analyze_settings(o);
  const std::uint64_t seed = resolve_seed(o);
  const data::FacilityPanel panel = data::read_csv(a.panel_path);
  if (panel.empty()) throw DomainError("analyze: panel '" + a.panel_path + "' has no rows");

  Outputs files(o.out_dir);
  json report{{"panel", a.panel_path}, {"rows", panel.size()}};

  const econ::GroupTable counties = econ::aggregate(panel, econ::GroupKey::county);
  const econ::GroupTable chains = econ::aggregate(panel, econ::GroupKey::chain);
  files.write("county_table.csv", econ::to_csv(counties));
  files.write("chain_table.csv", econ::to_csv(chains));

  // spillovers
  json spill = json::array();
  std::string spill_csv = "level,outcome,sample,n,n_clusters,county_peer,county_peer_se,chain_peer,chain_peer_se,r2,dropped\n";
  for (const auto level : {econ::GroupKey::county, econ::GroupKey::chain}) {
    for (const auto& outcome : a.spillover_outcomes) {
      for (const auto sample : {econ::Sample::full, econ::Sample::below, econ::Sample::above}) {
        econ::SpilloverSpec spec;
        spec.outcome = outcome;
        spec.level = level;
        spec.sample = sample;
        spec.county_cutoff = a.county_cutoff;
        spec.chain_cutoff = a.chain_cutoff;
        spec.state_fe = a.state_fe;
        json row{{"level", econ::to_string(level)}, {"outcome", outcome}, {"sample", econ::to_string(sample)}};
        try {
          const econ::RegressionResult r = econ::spillover_regression(panel, spec);
          row["result"] = r;
          auto coef = [&](const char* name) {
            return r.has(name) ? format_double(r.coef_of(name)) + "," + format_double(r.se_of(name)) : std::string("NA,NA");
          };
          std::string dropped;
          for (const auto& d : r.dropped) dropped += (dropped.empty() ? "" : ";") + d;
          spill_csv += econ::to_string(level) + "," + outcome + "," + econ::to_string(sample) + "," + std::to_string(r.n) +
                       "," + std::to_string(r.n_clusters) + "," + coef("county_peer") + "," + coef("chain_peer") + "," +
                       format_double(r.r2) + "," + dropped + "\n";
        } catch (const DomainError& e) {
          row["skipped"] = e.what();
          spill_csv += econ::to_string(level) + "," + outcome + "," + econ::to_string(sample) + ",0,0,NA,NA,NA,NA,NA,\n";
        }
        spill.push_back(row);
      }
    }
  }
  report["spillover"] = spill;
  files.write("spillover.csv", spill_csv);

  // break searches
  const std::vector<std::string> county_controls{"share_for_profit", "share_gov", "share_in_chain", "avg_beds"};
  const std::vector<std::string> chain_controls{"share_for_profit", "share_gov", "avg_beds"};
  auto run_break = [&](const std::string& tag, const econ::GroupTable& t, const std::string& y, const std::string& x,
                       const std::vector<std::string>& controls, int reps, std::uint64_t stream) {
    json entry{{"outcome", y}, {"forcing", x}, {"controls", controls}, {"units", t.ids.size()}};
    try {
      econ::BreakOptions opt;
      opt.bootstrap_reps = reps;
      opt.seed = substream_seed(seed, stream);
      opt.threads = o.threads;
      const econ::BreakResult r = econ::break_search(t.vector(y), t.vector(x), controls_of(t, controls), opt);
      entry["result"] = r;
      entry["relative_position"] = relative_position(r);
      files.write("f_profile_" + tag + ".tsv", econ::profile_tsv(r));
    } catch (const DomainError& e) {
      entry["skipped"] = e.what();
    }
    return entry;
  };
  report["break_county"] = run_break("county", counties, "sff", "log_n", county_controls, a.bootstrap_reps, 1);
  report["break_chain"] = run_break("chain", chains, "sff", "log_n", chain_controls, a.bootstrap_reps, 2);
  files.write_json("break_county.json", report["break_county"]);
  files.write_json("break_chain.json", report["break_chain"]);

  // placebos: ownership-share outcomes on the right forcing, SFF on a wrong forcing
  json placebo{{"wrong_outcome", json::array()}};
  for (const char* y : {"share_non_profit", "share_gov", "share_for_profit"}) {
    placebo["wrong_outcome"].push_back(run_break(std::string("placebo_") + y, counties, y, "log_n", {}, 0, 0));
  }
  placebo["wrong_forcing"] = run_break("placebo_log_avg_beds", counties, "sff", "log_avg_beds", county_controls, 0, 0);
  report["placebo"] = placebo;
  files.write_json("placebo.json", placebo);

  // variance by threshold
  json variance = json::array();
  std::string var_csv = "network,cutoff,outcome,n_small,n_large,var_small,var_large,levene_w,p_value\n";
  for (const auto key : {econ::GroupKey::county, econ::GroupKey::chain}) {
    const int cutoff = key == econ::GroupKey::county ? a.county_cutoff : a.chain_cutoff;
    try {
      for (const auto& row : econ::variance_by_threshold(panel, key, cutoff, a.variance_outcomes, a.center)) {
        variance.push_back({{"network", econ::to_string(key)}, {"cutoff", cutoff}, {"outcome", row.outcome},
                            {"n_small", row.n_small}, {"n_large", row.n_large}, {"var_small", row.var_small},
                            {"var_large", row.var_large}, {"levene_w", row.levene_w}, {"p_value", row.p_value}});
        var_csv += econ::to_string(key) + "," + std::to_string(cutoff) + "," + row.outcome + "," +
                   std::to_string(row.n_small) + "," + std::to_string(row.n_large) + "," + format_double(row.var_small) +
                   "," + format_double(row.var_large) + "," + format_double(row.levene_w) + "," +
                   format_double(row.p_value) + "\n";
      }
    } catch (const DomainError& e) {
      variance.push_back({{"network", econ::to_string(key)}, {"cutoff", cutoff}, {"skipped", e.what()}});
    }
  }
  report["variance_by_threshold"] = variance;
  files.write("variance_by_threshold.csv", var_csv);

  // deterioration
  econ::DeteriorationSpec det;
  det.county_cutoff = a.county_cutoff;
  det.chain_cutoff = a.chain_cutoff;
  det.state_fe = a.state_fe;
  const econ::RegressionResult d = econ::deterioration_regression(panel, det);
  report["deterioration"] = d;
  std::string det_csv = "term,estimate,se,ci_lower,ci_upper\n";
  for (std::size_t i = 0; i < d.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    det_csv += d.names[i] + "," + format_double(d.coef[k]) + "," + format_double(d.se[k]) + "," +
               format_double(d.coef[k] - 1.96 * d.se[k]) + "," + format_double(d.coef[k] + 1.96 * d.se[k]) + "\n";
  }
  files.write("deterioration.csv", det_csv);

  files.write_json("report.json", report);
  json effective{{"analyze",
                  {{"panel", a.panel_path},
                   {"county_cutoff", a.county_cutoff},
                   {"chain_cutoff", a.chain_cutoff},
                   {"bootstrap_reps", a.bootstrap_reps},
                   {"spillover_outcomes", a.spillover_outcomes},
                   {"variance_outcomes", a.variance_outcomes},
                   {"levene_center", a.center == econ::LeveneCenter::mean ? "mean" : "median"},
                   {"state_fe", a.state_fe}}},
                 {"panel_sha256", sha256_file(a.panel_path)},
                 {"threads", o.threads}};
  return files.finish("analyze", effective, seed, report);
}

RunResult run(const std::string& subcommand, const RunOptions& options) {
  if (subcommand == "solve") return cmd_solve(options);
  if (subcommand == "threshold") return cmd_threshold(options);
  if (subcommand == "spectral") return cmd_spectral(options);
  if (subcommand == "simulate") return cmd_simulate(options);
  if (subcommand == "gen") return cmd_gen(options);
  if (subcommand == "analyze") return cmd_analyze(options);
  throw DomainError("unknown subcommand '" + subcommand + "'");
}

}  // namespace netmon::cli
