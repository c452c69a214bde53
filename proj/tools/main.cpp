#include <CLI11.hpp>
#include <iostream>

#include "gpsep/commands.hpp"
#include "gpsep/common.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  gpsep::cli::CommandOptions options;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  std::string prior_value;
  bool prior_given = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file")->required();
  cmd->add_option("--out-dir", flags.options.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed_value, "override every seed in the config")
      ->each([&flags](const std::string&) { flags.seed_given = true; });
  cmd->add_option("--prior", flags.prior_value,
                  "restrict to one prior kind (reference, indep_jeffreys, "
                  "jeffreys_rule, empirical_bayes)")
      ->each([&flags](const std::string&) { flags.prior_given = true; });
  cmd->add_flag("--force-dense", flags.options.force_dense,
                "use the explicit n x n path even on Cartesian grids");
  cmd->add_flag("--resume", flags.options.resume,
                "continue a partially completed coverage study");
}

int dispatch(const std::string& name, CommonFlags& flags) {
  using namespace gpsep::cli;
  if (flags.seed_given) flags.options.seed = flags.seed_value;
  if (flags.prior_given) flags.options.prior = flags.prior_value;
  RunConfig cfg;
  try {
    cfg = parse_config_file(flags.config_path);
  } catch (const gpsep::InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  if (name == "fit") return cmd_fit(cfg, flags.options);
  if (name == "sample") return cmd_sample(cfg, flags.options);
  if (name == "prior-eval") return cmd_prior_eval(cfg, flags.options);
  if (name == "coverage") return cmd_coverage(cfg, flags.options);
  if (name == "simulate") return cmd_simulate(cfg, flags.options);
  std::cerr << "error: unknown command '" << name << "'\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Objective Bayesian analysis of Gaussian-process models with "
               "separable correlation"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit", "maximize the integrated likelihood by Fisher scoring"},
      {"sample", "draw from the posterior for each requested prior"},
      {"prior-eval", "evaluate the formal log priors on a range grid"},
      {"coverage", "run the frequentist coverage study"},
      {"simulate", "write a synthetic dataset to disk"},
  };

  std::vector<std::unique_ptr<CommonFlags>> flag_sets;
  for (const auto& [name, description] : commands) {
    auto flags = std::make_unique<CommonFlags>();
    CLI::App* cmd = app.add_subcommand(name, description);
    add_common(cmd, *flags);
    CommonFlags* raw = flags.get();
    const std::string cmd_name = name;
    cmd->callback([cmd_name, raw]() {
      const int code = dispatch(cmd_name, *raw);
      if (code != 0) throw CLI::RuntimeError(code);
    });
    flag_sets.push_back(std::move(flags));
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
