#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace netmon::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240501;

/// Everything a subcommand needs. `config` is the parsed config file (or an
/// empty object); the optional fields are command-line overrides.
struct RunOptions {
  nlohmann::json config = nlohmann::json::object();
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cost_mode;
  std::optional<int> county_cutoff;
  std::optional<int> chain_cutoff;
  unsigned threads = 1;
};

struct RunResult {
  nlohmann::json summary;               // the subcommand's main JSON document
  std::vector<std::string> outputs;     // files written, relative to out_dir
  std::string manifest_path;
};

/// Reads a JSON config file; IoError when unreadable, DomainError when not JSON.
nlohmann::json load_config(const std::string& path);

/// Seed precedence: --seed, then config "seed", then NETMON_SEED, then the default.
std::uint64_t resolve_seed(const RunOptions& options);

RunResult cmd_solve(const RunOptions& options);
RunResult cmd_threshold(const RunOptions& options);
RunResult cmd_spectral(const RunOptions& options);
RunResult cmd_simulate(const RunOptions& options);
RunResult cmd_gen(const RunOptions& options);
RunResult cmd_analyze(const RunOptions& options);

/// Dispatch by subcommand name.
RunResult run(const std::string& subcommand, const RunOptions& options);

/// 2 for validation errors, 3 for numerical failures, 4 for I/O, 1 otherwise.
int exit_code(const std::exception& e);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

std::string version();

}  // namespace netmon::cli
