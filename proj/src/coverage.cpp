#include "gpsep/coverage.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "gpsep/common.hpp"
#include "gpsep/likelihood.hpp"
#include "gpsep/rng.hpp"

namespace gpsep::coverage {

namespace {
// substream purposes of the study (rule v1)
constexpr std::uint64_t kTagSimulate = 11;
constexpr std::uint64_t kTagChainBase = 100;
}  // namespace

MeanStructure mean_from_name(const std::string& name) {
  if (name == "constant") return MeanStructure::constant;
  if (name == "x1_slope") return MeanStructure::x1_slope;
  if (name == "product") return MeanStructure::product;
  throw InputError("unknown mean structure '" + name + "'");
}

std::string mean_name(MeanStructure m) {
  switch (m) {
    case MeanStructure::constant: return "constant";
    case MeanStructure::x1_slope: return "x1_slope";
    case MeanStructure::product: return "product";
  }
  return "unknown";
}

std::vector<Eigen::VectorXd> make_mean_factors(const DesignGrid& grid, MeanStructure m) {
  if (!grid.is_cartesian())
    throw InputError("make_mean_factors: requires a Cartesian grid");
  const auto sizes = grid.factor_sizes();
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const bool coord = (m == MeanStructure::product) ||
                       (m == MeanStructure::x1_slope && k == 0);
    if (coord) {
      const Eigen::MatrixXd& loc = grid.factor_locations()[k];
      if (loc.cols() != 1)
        throw InputError("make_mean_factors: coordinate mean needs 1-D factors");
      xs.push_back(loc.col(0));
    } else {
      xs.push_back(Eigen::VectorXd::Ones(sizes[k]));
    }
  }
  return xs;
}

DesignGrid GridSpec::build() const {
  if (sizes.size() != ranges.size())
    throw InputError("GridSpec: sizes and ranges must have the same length");
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k)
    factors.push_back(linspace_locations(ranges[k].first, ranges[k].second, sizes[k]));
  return DesignGrid::cartesian(std::move(factors));
}

Eigen::VectorXd beta_to_xi(const Eigen::VectorXd& beta, const std::vector<double>& alpha) {
  if (static_cast<std::size_t>(beta.size()) != alpha.size())
    throw InputError("beta_to_xi: beta and alpha lengths differ");
  Eigen::VectorXd xi(beta.size());
  for (long k = 0; k < beta.size(); ++k) {
    if (!(beta(k) > 0.0)) throw InputError("beta_to_xi: beta must be positive");
    xi(k) = std::pow(beta(k), 1.0 / alpha[static_cast<std::size_t>(k)]);
  }
  return xi;
}

GpDataset simulate_gp(const DesignGrid& grid,
                      const std::vector<corr::CorrelationFamily>& families,
                      const std::vector<Eigen::VectorXd>& x_factors, double theta,
                      double sigma_sq, const Eigen::VectorXd& xi, std::uint64_t seed) {
  if (!(sigma_sq >= 0.0)) throw InputError("simulate_gp: sigma_sq must be nonnegative");
  GpDataset blank(Eigen::VectorXd::Zero(grid.total_points()), grid, families, x_factors);
  const auto sigmas = blank.factor_sigmas(xi);
  const kron::FactorCholesky chol(sigmas);

  Rng rng(seed);
  Eigen::VectorXd z(blank.n());
  for (long i = 0; i < z.size(); ++i) z(i) = rng.normal();
  const Eigen::VectorXd noise = chol.apply_lower(z);
  const Eigen::VectorXd y = blank.design_matrix() * theta + std::sqrt(sigma_sq) * noise;
  return GpDataset(y, grid, families, x_factors);
}

GpDataset simulate_dataset(const Truth& truth, const GridSpec& design, std::uint64_t seed) {
  const DesignGrid grid = design.build();
  std::vector<corr::CorrelationFamily> families;
  families.reserve(truth.alpha.size());
  for (double a : truth.alpha)
    families.emplace_back(corr::Family::power_exponential, a);
  const auto xs = make_mean_factors(grid, truth.mean);
  const Eigen::VectorXd xi = beta_to_xi(truth.beta, truth.alpha);
  return simulate_gp(grid, families, xs, truth.theta, truth.sigma_sq, xi, seed);
}

namespace {

struct RepOutcome {
  bool ok = false;
  // [prior][parameter]
  std::vector<std::vector<int>> covered;
  std::vector<std::vector<double>> lengths;
};

// equal-tailed interval of one tracked parameter from the chain draws
mcmc::IntervalSummary parameter_interval(const mcmc::Chain& chain,
                                         const std::string& parameter,
                                         const Truth& truth, double gamma) {
  if (parameter == "sigma_sq")
    return mcmc::summarize_column(chain.column("sigma_sq"), gamma);
  if (parameter == "theta")
    return mcmc::summarize_column(chain.column("theta_1"), gamma);
  if (parameter.rfind("beta_", 0) == 0) {
    const int k = std::stoi(parameter.substr(5));
    if (k < 1 || k > chain.r) throw InputError("unknown parameter '" + parameter + "'");
    const double alpha = truth.alpha[static_cast<std::size_t>(k - 1)];
    Eigen::VectorXd draws = chain.column("xi_" + std::to_string(k));
    draws = draws.array().pow(alpha);  // monotone map, quantiles commute
    return mcmc::summarize_column(draws, gamma);
  }
  throw InputError("unknown parameter '" + parameter + "'");
}

double true_value(const std::string& parameter, const Truth& truth) {
  if (parameter == "sigma_sq") return truth.sigma_sq;
  if (parameter == "theta") return truth.theta;
  if (parameter.rfind("beta_", 0) == 0) {
    const int k = std::stoi(parameter.substr(5));
    return truth.beta(k - 1);
  }
  throw InputError("unknown parameter '" + parameter + "'");
}

RepOutcome run_replication(const StudyConfig& cfg, int rep) {
  RepOutcome out;
  const std::uint64_t sim_seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep), kTagSimulate);
  const GpDataset data = simulate_dataset(cfg.truth, cfg.design, sim_seed);

  const mle::MleResult fit = mle::fisher_scoring(data);
  if (!fit.converged) return out;  // excluded
  mcmc::ProposalSpec prop = mcmc::proposal_covariance(fit);
  if (cfg.proposal_c > 0.0) prop.scale_mult = cfg.proposal_c;
  prop.dof = cfg.proposal_dof;

  out.covered.resize(cfg.priors.size());
  out.lengths.resize(cfg.priors.size());
  for (std::size_t p = 0; p < cfg.priors.size(); ++p) {
    priors::PriorSpec spec = priors::PriorSpec::reference();
    switch (cfg.priors[p]) {
      case priors::PriorKind::reference: break;
      case priors::PriorKind::indep_jeffreys: spec = priors::PriorSpec::indep_jeffreys(); break;
      case priors::PriorKind::jeffreys_rule: spec = priors::PriorSpec::jeffreys_rule(data.q()); break;
      case priors::PriorKind::empirical_bayes:
        spec = priors::PriorSpec::empirical_bayes(fit.sigma_sq_hat, fit.xi_hat,
                                                  cfg.eb_multiplier);
        break;
    }
    mcmc::ChainControls controls;
    controls.iterations = cfg.iterations;
    controls.burn_in = cfg.burn_in;
    controls.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep),
                                kTagChainBase + p);
    controls.proposal = prop;
    controls.init_sigma_sq = fit.sigma_sq_hat;
    controls.init_xi = fit.xi_hat;
    const mcmc::Chain chain = mcmc::run_chain(data, spec, controls);

    for (const auto& parameter : cfg.parameters) {
      const auto interval = parameter_interval(chain, parameter, cfg.truth, cfg.gamma);
      const double truth_value = true_value(parameter, cfg.truth);
      const bool inside = interval.lower <= truth_value && truth_value <= interval.upper;
      out.covered[p].push_back(inside ? 1 : 0);
      out.lengths[p].push_back(interval.length());
    }
  }
  out.ok = true;
  return out;
}

// progress file: one line per replication,
//   rep,ok[,covered:length per prior x parameter in declaration order]
std::string outcome_line(int rep, const RepOutcome& out) {
  std::ostringstream line;
  line << rep << "," << (out.ok ? 1 : 0);
  line.precision(17);
  if (out.ok)
    for (std::size_t p = 0; p < out.covered.size(); ++p)
      for (std::size_t j = 0; j < out.covered[p].size(); ++j)
        line << "," << out.covered[p][j] << "," << out.lengths[p][j];
  return line.str();
}

bool parse_outcome_line(const std::string& line, const StudyConfig& cfg, int& rep,
                        RepOutcome& out) {
  std::stringstream ss(line);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() < 2) return false;
  rep = std::stoi(cells[0]);
  out = RepOutcome{};
  out.ok = cells[1] == "1";
  if (!out.ok) return true;
  const std::size_t expected = 2 + 2 * cfg.priors.size() * cfg.parameters.size();
  if (cells.size() != expected) return false;
  std::size_t at = 2;
  out.covered.resize(cfg.priors.size());
  out.lengths.resize(cfg.priors.size());
  for (std::size_t p = 0; p < cfg.priors.size(); ++p)
    for (std::size_t j = 0; j < cfg.parameters.size(); ++j) {
      out.covered[p].push_back(std::stoi(cells[at++]));
      out.lengths[p].push_back(std::stod(cells[at++]));
    }
  return true;
}

}  // namespace

CoverageReport run_study(const StudyConfig& cfg, const std::string& progress_path) {
  if (cfg.replications < 1) throw InputError("run_study: replications must be >= 1");
  if (cfg.priors.empty()) throw InputError("run_study: no priors requested");
  if (cfg.parameters.empty()) throw InputError("run_study: no parameters requested");

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.replications));
  std::vector<bool> done(static_cast<std::size_t>(cfg.replications), false);

  if (!progress_path.empty()) {
    std::ifstream in(progress_path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      int rep = -1;
      RepOutcome out;
      if (parse_outcome_line(line, cfg, rep, out) && rep >= 0 && rep < cfg.replications) {
        outcomes[static_cast<std::size_t>(rep)] = std::move(out);
        done[static_cast<std::size_t>(rep)] = true;
      }
    }
  }

  std::atomic<int> next{0};
  std::mutex io_mutex;
  std::ofstream progress;
  if (!progress_path.empty()) progress.open(progress_path, std::ios::app);

  int workers = cfg.workers;
  if (workers <= 0) {
    const char* env = std::getenv("GPSEP_WORKERS");
    if (env != nullptr) workers = std::atoi(env);
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.replications));

  const auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.replications) return;
      if (done[static_cast<std::size_t>(rep)]) continue;
      RepOutcome out;
      try {
        out = run_replication(cfg, rep);
      } catch (const std::exception&) {
        out.ok = false;  // recorded and excluded
      }
      outcomes[static_cast<std::size_t>(rep)] = out;
      if (progress.is_open()) {
        std::lock_guard<std::mutex> lock(io_mutex);
        progress << outcome_line(rep, outcomes[static_cast<std::size_t>(rep)]) << "\n";
        progress.flush();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  CoverageReport report;
  report.parameters = cfg.parameters;
  report.priors = cfg.priors;
  report.replications_requested = cfg.replications;
  report.cells.assign(cfg.priors.size(),
                      std::vector<CellReport>(cfg.parameters.size()));

  int included = 0;
  for (const auto& out : outcomes)
    if (out.ok) ++included;
  report.replications_included = included;
  report.excluded = cfg.replications - included;
  if (included == 0) throw NumericalError("run_study: every replication failed");

  for (std::size_t p = 0; p < cfg.priors.size(); ++p)
    for (std::size_t j = 0; j < cfg.parameters.size(); ++j) {
      double hits = 0.0, total_len = 0.0;
      for (const auto& out : outcomes) {
        if (!out.ok) continue;
        hits += out.covered[p][j];
        total_len += out.lengths[p][j];
      }
      CellReport& cell = report.cells[p][j];
      const double n_inc = static_cast<double>(included);
      cell.coverage = hits / n_inc;
      cell.expected_length = total_len / n_inc;
      cell.std_dev = std::sqrt(cell.coverage * (1.0 - cell.coverage) / n_inc);
    }
  return report;
}

const CellReport& CoverageReport::cell(priors::PriorKind kind,
                                       const std::string& parameter) const {
  for (std::size_t p = 0; p < priors.size(); ++p)
    if (priors[p] == kind)
      for (std::size_t j = 0; j < parameters.size(); ++j)
        if (parameters[j] == parameter) return cells[p][j];
  throw InputError("CoverageReport::cell: no cell for " + priors::prior_name(kind) +
                   " / " + parameter);
}

void write_report_csv(const CoverageReport& report, const std::string& path,
                      const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw InputError("write_report_csv: cannot open '" + path + "'");
  out << "# config_hash=" << config_hash << "\n";
  out << "prior,parameter,coverage,expected_length,std_dev,excluded\n";
  out.precision(10);
  for (std::size_t p = 0; p < report.priors.size(); ++p)
    for (std::size_t j = 0; j < report.parameters.size(); ++j) {
      const CellReport& cell = report.cells[p][j];
      out << priors::prior_name(report.priors[p]) << "," << report.parameters[j] << ","
          << cell.coverage << "," << cell.expected_length << "," << cell.std_dev << ","
          << report.excluded << "\n";
    }
}

std::string format_report_table(const CoverageReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "prior" << std::setw(12) << "parameter"
      << std::right << std::setw(10) << "coverage" << std::setw(14) << "exp. length"
      << std::setw(10) << "std.dev" << "\n";
  out << std::fixed << std::setprecision(3);
  for (std::size_t p = 0; p < report.priors.size(); ++p)
    for (std::size_t j = 0; j < report.parameters.size(); ++j) {
      const CellReport& cell = report.cells[p][j];
      out << std::left << std::setw(22) << priors::prior_name(report.priors[p])
          << std::setw(12) << report.parameters[j] << std::right << std::setw(10)
          << cell.coverage << std::setw(14) << cell.expected_length << std::setw(10)
          << cell.std_dev << "\n";
    }
  out << "replications: " << report.replications_included << " included, "
      << report.excluded << " excluded\n";
  return out.str();
}

ProprietyResult propriety_probe(const GpDataset& data, priors::PriorKind kind, double a,
                                const ProprietyGrid& grid) {
  if (data.r() > 2)
    throw InputError("propriety_probe: only r <= 2 is supported");
  if (kind == priors::PriorKind::empirical_bayes)
    throw InputError("propriety_probe: probes the formal priors only");
  if (!(grid.lo > 0.0 && grid.hi > grid.lo) || grid.points < 8)
    throw InputError("propriety_probe: invalid grid");

  const auto log_mass_on = [&](int points) {
    const double ulo = std::log(grid.lo), uhi = std::log(grid.hi);
    const double h = (uhi - ulo) / static_cast<double>(points - 1);
    std::vector<double> terms;
    const int r = data.r();
    const long total = (r == 1) ? points : static_cast<long>(points) * points;
    terms.reserve(static_cast<std::size_t>(total));
    for (long idx = 0; idx < total; ++idx) {
      Eigen::VectorXd u(r);
      double weight = 1.0;
      long rem = idx;
      for (int k = 0; k < r; ++k) {
        const long i = rem % points;
        rem /= points;
        u(k) = ulo + h * static_cast<double>(i);
        weight *= (i == 0 || i == points - 1) ? 0.5 * h : h;  // trapezoid
      }
      const Eigen::VectorXd xi = u.array().exp();
      double value;
      try {
        value = lik::log_integrated_theta_sigma(data, xi, a) +
                priors::formal_log_prior(*lik::assemble(data, xi), data, kind) +
                u.sum() + std::log(weight);  // + log Jacobian of xi = e^u
      } catch (const NumericalError&) {
        continue;  // a grid point too extreme to factorize contributes ~0 mass
      }
      if (std::isfinite(value)) terms.push_back(value);
    }
    if (terms.empty())
      throw NumericalError("propriety_probe: integrand evaluated nowhere finite");
    const double peak = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - peak);
    return peak + std::log(acc);
  };

  ProprietyResult result;
  result.log_mass = log_mass_on(grid.points);
  const double refined = log_mass_on(2 * grid.points - 1);
  result.refinement_ratio = std::exp(refined - result.log_mass);
  return result;
}

}  // namespace gpsep::coverage
