#include "gpsep/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "gpsep/common.hpp"
#include "gpsep/coverage.hpp"
#include "gpsep/io_util.hpp"
#include "gpsep/mcmc.hpp"
#include "gpsep/mle.hpp"

namespace gpsep::cli {

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "'");
}

RunConfig apply_overrides(RunConfig cfg, const CommandOptions& opt) {
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.data_seed = *opt.seed;
    cfg.master_seed = *opt.seed;
  }
  if (opt.prior) {
    priors::prior_from_name(*opt.prior);  // validates
    cfg.prior_kinds = {*opt.prior};
  }
  return cfg;
}

// what-you-ran-is-what-you-see: the resolved config goes next to the outputs
void write_resolved_config(const RunConfig& cfg, const std::string& out_dir) {
  std::ofstream out(join_path(out_dir, "resolved_config.cfg"));
  out << "# config_hash=" << config_hash(cfg) << "\n" << serialize_config(cfg);
}

priors::PriorSpec make_prior_spec(priors::PriorKind kind, const GpDataset& data,
                                  const mle::MleResult& fit, double eb_multiplier) {
  switch (kind) {
    case priors::PriorKind::reference: return priors::PriorSpec::reference();
    case priors::PriorKind::indep_jeffreys: return priors::PriorSpec::indep_jeffreys();
    case priors::PriorKind::jeffreys_rule: return priors::PriorSpec::jeffreys_rule(data.q());
    case priors::PriorKind::empirical_bayes:
      return priors::PriorSpec::empirical_bayes(fit.sigma_sq_hat, fit.xi_hat, eb_multiplier);
  }
  throw InputError("make_prior_spec: unknown prior kind");
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace

int cmd_fit(const RunConfig& raw_cfg, const CommandOptions& opt) {
  return guarded([&]() {
    const RunConfig cfg = apply_overrides(raw_cfg, opt);
    ensure_out_dir(opt.out_dir);
    write_resolved_config(cfg, opt.out_dir);
    const GpDataset data = build_dataset(cfg);

    mle::ScoringControls controls;
    controls.path = opt.force_dense ? Path::dense : Path::automatic;
    const mle::MleResult fit = mle::fisher_scoring(data, std::nullopt, controls);

    const std::string hash = config_hash(cfg);
    {
      std::ofstream out(join_path(opt.out_dir, "fit.txt"));
      out << "# config_hash=" << hash << "\n";
      out.precision(12);
      out << "converged = " << (fit.converged ? "true" : "false") << "\n";
      out << "iterations = " << fit.iterations << "\n";
      out << "log_integrated_likelihood = " << fit.log_lik << "\n";
      out << "sigma_sq_hat = " << fit.sigma_sq_hat << "\n";
      for (long k = 0; k < fit.xi_hat.size(); ++k)
        out << "xi_hat_" << (k + 1) << " = " << fit.xi_hat(k) << "\n";
      for (long k = 0; k < fit.xi_hat.size(); ++k)
        out << "beta_hat_" << (k + 1) << " = "
            << std::pow(fit.xi_hat(k), cfg.roughness[static_cast<std::size_t>(k)]) << "\n";
      out << "fisher_information =\n" << fit.info.matrix << "\n";
    }
    {
      Eigen::MatrixXd trace(static_cast<long>(fit.trace.size()), 3 + fit.xi_hat.size());
      for (std::size_t i = 0; i < fit.trace.size(); ++i) {
        const auto& rec = fit.trace[i];
        trace(static_cast<long>(i), 0) = rec.sigma_sq;
        trace(static_cast<long>(i), 1) = rec.grad_norm;
        trace(static_cast<long>(i), 2) = rec.log_lik;
        for (long k = 0; k < rec.xi.size(); ++k)
          trace(static_cast<long>(i), 3 + k) = rec.xi(k);
      }
      std::string header = "sigma_sq,grad_norm,log_lik";
      for (long k = 0; k < fit.xi_hat.size(); ++k)
        header += ",xi_" + std::to_string(k + 1);
      io::write_csv_matrix(join_path(opt.out_dir, "fit_trace.csv"), trace,
                           {"config_hash=" + hash}, header);
    }
    if (!fit.converged) {
      std::cerr << "numerical failure: scoring did not converge in " << fit.iterations
                << " iterations\n";
      return 2;
    }
    std::cout << "fit written to " << join_path(opt.out_dir, "fit.txt") << "\n";
    return 0;
  });
}

int cmd_sample(const RunConfig& raw_cfg, const CommandOptions& opt) {
  return guarded([&]() {
    const RunConfig cfg = apply_overrides(raw_cfg, opt);
    ensure_out_dir(opt.out_dir);
    write_resolved_config(cfg, opt.out_dir);
    const GpDataset data = build_dataset(cfg);
    const std::string hash = config_hash(cfg);
    const Path path = opt.force_dense ? Path::dense : Path::automatic;

    mle::ScoringControls fit_controls;
    fit_controls.path = path;
    const mle::MleResult fit = mle::fisher_scoring(data, std::nullopt, fit_controls);
    mcmc::ProposalSpec prop = mcmc::proposal_covariance(fit);
    if (cfg.c > 0.0) prop.scale_mult = cfg.c;
    prop.dof = cfg.dof;

    for (const auto& kind_name : cfg.prior_kinds) {
      const auto kind = priors::prior_from_name(kind_name);
      const auto spec = make_prior_spec(kind, data, fit, cfg.eb_multiplier);

      mcmc::ChainControls controls;
      controls.iterations = cfg.iterations;
      controls.burn_in = cfg.burn_in;
      controls.seed = cfg.seed;
      controls.proposal = prop;
      controls.step2_literal = cfg.step2_literal;
      controls.init_sigma_sq = fit.sigma_sq_hat;
      controls.init_xi = fit.xi_hat;
      controls.path = path;
      const mcmc::Chain chain = mcmc::run_chain(data, spec, controls);

      const std::string base = "chain_" + kind_name;
      mcmc::write_chain(chain, join_path(opt.out_dir, base + ".csv"),
                        join_path(opt.out_dir, base + ".meta"),
                        {{"config_hash", hash},
                         {"c", std::to_string(prop.scale_mult)},
                         {"dof", std::to_string(prop.dof)}},
                        {"config_hash=" + hash});
      std::cout << kind_name << ": acceptance rate " << chain.accept_rate() << "\n";

      for (const auto& column : chain.column_names()) {
        const Eigen::MatrixXd kde = io::kernel_density(chain.column(column));
        io::write_csv_matrix(join_path(opt.out_dir, "kde_" + kind_name + "_" + column + ".csv"),
                             kde, {"config_hash=" + hash}, "x,density");
      }
      if (kind == priors::PriorKind::empirical_bayes && spec.rates) {
        // overlay curves of the exponential priors, on the same axes as the KDEs
        const auto exp_curve = [](double rate, double hi) {
          Eigen::MatrixXd curve(256, 2);
          for (int i = 0; i < 256; ++i) {
            const double x = hi * static_cast<double>(i + 1) / 256.0;
            curve(i, 0) = x;
            curve(i, 1) = rate * std::exp(-rate * x);
          }
          return curve;
        };
        io::write_csv_matrix(join_path(opt.out_dir, "prior_density_precision.csv"),
                             exp_curve(spec.rates->precision_rate,
                                       10.0 / spec.rates->precision_rate),
                             {"config_hash=" + hash}, "x,density");
        for (long k = 0; k < spec.rates->xi_rates.size(); ++k)
          io::write_csv_matrix(
              join_path(opt.out_dir, "prior_density_xi_" + std::to_string(k + 1) + ".csv"),
              exp_curve(spec.rates->xi_rates(k), 10.0 / spec.rates->xi_rates(k)),
              {"config_hash=" + hash}, "x,density");
      }
    }
    return 0;
  });
}

int cmd_prior_eval(const RunConfig& raw_cfg, const CommandOptions& opt) {
  return guarded([&]() {
    const RunConfig cfg = apply_overrides(raw_cfg, opt);
    ensure_out_dir(opt.out_dir);
    write_resolved_config(cfg, opt.out_dir);
    const GpDataset data = build_dataset(cfg);
    const Path path = opt.force_dense ? Path::dense : Path::automatic;

    if (cfg.xi_grid.empty())
      throw InputError("field 'prior_eval.xi_grid': an evaluation grid is required");
    if (cfg.xi_grid.size() != static_cast<std::size_t>(data.r()))
      throw InputError("field 'prior_eval.xi_grid': one axis per factor is required");

    std::vector<Eigen::VectorXd> axes;
    long total = 1;
    for (const auto& [lo, hi, count] : cfg.xi_grid) {
      Eigen::VectorXd axis(count);
      for (int i = 0; i < count; ++i)
        axis(i) = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
      axes.push_back(axis);
      total *= count;
    }
    if (total > cfg.max_grid_points) {
      warn("cmd_prior_eval", "grid capped at max_grid_points");
      std::cerr << "warning: grid of " << total << " points capped to "
                << cfg.max_grid_points << "\n";
      total = cfg.max_grid_points;
    }

    Eigen::MatrixXd out(total, data.r() + 3);
    long degenerate = 0;
    for (long idx = 0; idx < total; ++idx) {
      Eigen::VectorXd xi(data.r());
      long rem = idx;
      for (int k = data.r() - 1; k >= 0; --k) {
        const long count = axes[static_cast<std::size_t>(k)].size();
        xi(k) = axes[static_cast<std::size_t>(k)](rem % count);
        rem /= count;
      }
      const auto a = lik::assemble(data, xi, path);
      for (int k = 0; k < data.r(); ++k) out(idx, k) = xi(k);
      for (int which = 0; which < 3; ++which) {
        const auto kind = which == 0   ? priors::PriorKind::reference
                          : which == 1 ? priors::PriorKind::indep_jeffreys
                                       : priors::PriorKind::jeffreys_rule;
        try {
          out(idx, data.r() + which) = priors::formal_log_prior(*a, data, kind);
        } catch (const NumericalError&) {
          // the log prior falls below numerical resolution out here
          out(idx, data.r() + which) = -std::numeric_limits<double>::infinity();
          ++degenerate;
        }
      }
    }
    if (degenerate > 0) {
      warn("cmd_prior_eval", "grid points below numerical resolution recorded as -inf");
      std::cerr << "warning: " << degenerate
                << " prior values fell below numerical resolution (written as -inf)\n";
    }
    std::string header;
    for (int k = 0; k < data.r(); ++k) header += "xi_" + std::to_string(k + 1) + ",";
    header += "log_reference,log_indep_jeffreys,log_jeffreys_rule";
    io::write_csv_matrix(join_path(opt.out_dir, "prior_surfaces.csv"), out,
                         {"config_hash=" + config_hash(cfg)}, header);
    std::cout << "prior surfaces written (" << total << " points)\n";
    return 0;
  });
}

int cmd_coverage(const RunConfig& raw_cfg, const CommandOptions& opt) {
  return guarded([&]() {
    const RunConfig cfg = apply_overrides(raw_cfg, opt);
    ensure_out_dir(opt.out_dir);
    write_resolved_config(cfg, opt.out_dir);
    coverage::StudyConfig study = build_study(cfg);

    const std::string progress = join_path(opt.out_dir, "replications.csv");
    if (!opt.resume) {
      std::error_code ec;
      std::filesystem::remove(progress, ec);
      std::ofstream seeded(progress);
      seeded << "# config_hash=" << config_hash(cfg) << "\n";
    }
    const coverage::CoverageReport report = coverage::run_study(study, progress);

    coverage::write_report_csv(report, join_path(opt.out_dir, "coverage.csv"),
                               config_hash(cfg));
    const std::string table = coverage::format_report_table(report);
    {
      std::ofstream out(join_path(opt.out_dir, "coverage.txt"));
      out << "# config_hash=" << config_hash(cfg) << "\n" << table;
    }
    std::cout << table;
    if (!report.acceptable()) {
      std::cerr << "numerical failure: " << report.excluded << " of "
                << report.replications_requested
                << " replications failed (more than 5%)\n";
      return 2;
    }
    return 0;
  });
}

int cmd_simulate(const RunConfig& raw_cfg, const CommandOptions& opt) {
  return guarded([&]() {
    const RunConfig cfg = apply_overrides(raw_cfg, opt);
    if (!cfg.synthetic)
      throw InputError("simulate requires a synthetic [data] block");
    ensure_out_dir(opt.out_dir);
    write_resolved_config(cfg, opt.out_dir);
    const GpDataset data = build_dataset(cfg);
    const std::string hash = config_hash(cfg);

    for (int k = 0; k < data.r(); ++k)
      io::write_csv_matrix(
          join_path(opt.out_dir, "factor_" + std::to_string(k + 1) + ".csv"),
          data.grid().factor_locations()[static_cast<std::size_t>(k)],
          {"config_hash=" + hash});
    io::write_csv_matrix(join_path(opt.out_dir, "response.csv"), data.y(),
                         {"config_hash=" + hash,
                          "lexicographic order, last factor fastest"});
    std::cout << "simulated dataset with n = " << data.n() << " written to "
              << opt.out_dir << "\n";
    return 0;
  });
}

}  // namespace gpsep::cli
