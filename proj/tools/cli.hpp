#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace glearn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CliConfig {
  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  bool force = false;
  // key=value pairs applied on top of the config file (value parsed as JSON,
  // falling back to a plain string).
  std::vector<std::pair<std::string, std::string>> overrides;

  std::string variant;        // baseline
  std::string teacher_path;   // train-student
  std::string cache_path;     // train-student, optional
  std::string model_path;     // finetune, eval
  std::string manifest_path;  // optional, all data-consuming subcommands
  std::string split = "test"; // eval
  std::string axis;           // sweep
  std::vector<double> values; // sweep
  std::vector<std::uint64_t> seeds;
};

struct ParseOutcome {
  std::optional<CliConfig> config;  // empty when the process should exit now
  int exit_code = kExitOk;
};

// Usage errors and --help text go to `err` / `out`.
ParseOutcome parse_args(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err);

// Run-directory contract: `.incomplete` exists from start until report.json is
// written; an existing report.json is only replaced with --force.
int run(const CliConfig& cli, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace glearn::cli
