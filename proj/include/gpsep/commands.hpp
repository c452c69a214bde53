#ifndef GPSEP_COMMANDS_HPP
#define GPSEP_COMMANDS_HPP

#include <optional>
#include <string>

#include "gpsep/config.hpp"

namespace gpsep::cli {

// Options shared by the subcommands; the CLI fills these from flags.
struct CommandOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;   // overrides mcmc.seed / data_seed
  std::optional<std::string> prior;    // restrict to one prior kind
  bool force_dense = false;
  bool resume = false;
};

// Exit codes: 0 success, 1 input error, 2 numerical failure.
int cmd_fit(const RunConfig& cfg, const CommandOptions& opt);
int cmd_sample(const RunConfig& cfg, const CommandOptions& opt);
int cmd_prior_eval(const RunConfig& cfg, const CommandOptions& opt);
int cmd_coverage(const RunConfig& cfg, const CommandOptions& opt);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt);

}  // namespace gpsep::cli

#endif
