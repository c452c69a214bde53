#ifndef GPSEP_COVERAGE_HPP
#define GPSEP_COVERAGE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gpsep/mcmc.hpp"
#include "gpsep/model.hpp"
#include "gpsep/priors.hpp"

namespace gpsep::coverage {

// Mean structures the study and the synthetic generators support: a constant
// level, a slope in the first coordinate, or the product of all coordinates.
enum class MeanStructure { constant, x1_slope, product };
MeanStructure mean_from_name(const std::string& name);
std::string mean_name(MeanStructure m);

// Per-factor mean-design columns for a Cartesian grid (requires 1-D factors
// for the non-constant structures).
std::vector<Eigen::VectorXd> make_mean_factors(const DesignGrid& grid, MeanStructure m);

// Equally spaced 1-D factors: sizes[k] points on [ranges[k].first, .second].
struct GridSpec {
  std::vector<int> sizes{5, 5};
  std::vector<std::pair<double, double>> ranges{{0.0, 1.0}, {0.0, 1.0}};
  DesignGrid build() const;
};

// The data-generating truth, stated on the beta scale of the decay
// rho(d) = exp(-beta d^alpha); internally beta maps to the range via
// xi = beta^(1/alpha).
struct Truth {
  double sigma_sq = 1.5;
  Eigen::VectorXd beta;
  std::vector<double> alpha;
  double theta = 1.0;
  MeanStructure mean = MeanStructure::constant;
};

Eigen::VectorXd beta_to_xi(const Eigen::VectorXd& beta, const std::vector<double>& alpha);

// Draw y ~ N(X theta, sigma_sq Sigma(xi)) through the per-factor Cholesky.
GpDataset simulate_gp(const DesignGrid& grid,
                      const std::vector<corr::CorrelationFamily>& families,
                      const std::vector<Eigen::VectorXd>& x_factors, double theta,
                      double sigma_sq, const Eigen::VectorXd& xi, std::uint64_t seed);
GpDataset simulate_dataset(const Truth& truth, const GridSpec& design, std::uint64_t seed);

struct StudyConfig {
  Truth truth;
  GridSpec design;
  std::vector<priors::PriorKind> priors{
      priors::PriorKind::reference, priors::PriorKind::indep_jeffreys,
      priors::PriorKind::jeffreys_rule, priors::PriorKind::empirical_bayes};
  int replications = 300;
  long iterations = 3000;
  long burn_in = 100;
  double proposal_c = 0.0;  // 0 = 2.4 / sqrt(r)
  int proposal_dof = 3;
  double eb_multiplier = 10.0;
  double gamma = 0.05;
  std::uint64_t master_seed = 20240901;
  int workers = 0;  // 0 = hardware concurrency
  std::vector<std::string> parameters{"sigma_sq", "theta", "beta_1"};
};

struct CellReport {
  double coverage = 0.0;
  double expected_length = 0.0;
  double std_dev = 0.0;
};

struct CoverageReport {
  std::vector<std::string> parameters;
  std::vector<priors::PriorKind> priors;
  std::vector<std::vector<CellReport>> cells;  // [prior][parameter]
  int replications_requested = 0;
  int replications_included = 0;
  int excluded = 0;

  // the study tolerates at most 5% failed replications
  bool acceptable() const {
    return excluded * 20 <= replications_requested;
  }
  const CellReport& cell(priors::PriorKind kind, const std::string& parameter) const;
};

// Runs the replications on a bounded worker pool; per-replication randomness
// derives from (master_seed, replication), so partial results are exactly
// resumable. progress_path, when nonempty, persists one line per finished
// replication and previously recorded replications are not recomputed.
CoverageReport run_study(const StudyConfig& cfg, const std::string& progress_path = "");

void write_report_csv(const CoverageReport& report, const std::string& path,
                      const std::string& config_hash);
std::string format_report_table(const CoverageReport& report);

// Grid check of posterior mass: integrates the fully integrated likelihood
// times the formal prior over a log-spaced range grid (r <= 2) and reports
// the log mass together with its stability under one 2x refinement.
struct ProprietyGrid {
  double lo = 1e-4;
  double hi = 1e4;
  int points = 64;
};
struct ProprietyResult {
  double log_mass;          // up to the priors' arbitrary additive constant
  double refinement_ratio;  // mass(refined) / mass(coarse), near 1 when stable
};
ProprietyResult propriety_probe(const GpDataset& data, priors::PriorKind kind, double a,
                                const ProprietyGrid& grid = {});

}  // namespace gpsep::coverage

#endif
