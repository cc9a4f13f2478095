#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "netmon/cli_reports.hpp"

int main(int argc, char** argv) {
  CLI::App app{"netmon: monitoring-network models, simulation and panel analysis"};
  app.set_version_flag("--version", netmon::cli::version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cost_mode;
  std::optional<int> county_cutoff;
  std::optional<int> chain_cutoff;
  unsigned threads = 1;

  const char* names[][2] = {
      {"solve", "Optimal monitoring, effort and welfare in both regimes"},
      {"threshold", "lambda*(n) curve and n* classification"},
      {"spectral", "Spectral radius, resolvent sums and spectral thresholds for a graph"},
      {"simulate", "Monte Carlo effort variance and amplification profile"},
      {"gen", "Generate a synthetic facility panel and its truth sidecar"},
      {"analyze", "Spillover, break, variance and deterioration analyses of a panel"},
  };
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Random seed (falls back to config, then NETMON_SEED)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--cost-mode", cost_mode, "Decentralized cost accounting")
        ->check(CLI::IsMember({"global", "per_unit"}));
    sub->add_option("--county-cutoff", county_cutoff, "Large-county cutoff (default 7)")->check(CLI::PositiveNumber);
    sub->add_option("--chain-cutoff", chain_cutoff, "Large-chain cutoff (default 34)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    netmon::cli::RunOptions options;
    if (!config_path.empty()) options.config = netmon::cli::load_config(config_path);
    options.out_dir = out_dir;
    options.seed = seed;
    options.cost_mode = cost_mode;
    options.county_cutoff = county_cutoff;
    options.chain_cutoff = chain_cutoff;
    options.threads = threads;
    const std::string sub = app.get_subcommands().front()->get_name();
    const netmon::cli::RunResult result = netmon::cli::run(sub, options);
    if (result.summary.contains("warnings")) {
      for (const auto& w : result.summary["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
    }
    std::cout << result.summary.dump(2) << "\n";
    std::cerr << "manifest: " << result.manifest_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return netmon::cli::exit_code(e);
  }
}
