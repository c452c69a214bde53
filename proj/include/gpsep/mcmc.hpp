#ifndef GPSEP_MCMC_HPP
#define GPSEP_MCMC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gpsep/mle.hpp"
#include "gpsep/model.hpp"
#include "gpsep/priors.hpp"
#include "gpsep/rng.hpp"

namespace gpsep::mcmc {

// Proposal for the block range update: heavy-tailed random walk in log
// coordinates. v_hat is the Schur complement A - v v' / u of the expected
// information over (log sigma_sq, log xi), i.e. the inverse of the
// asymptotic marginal covariance of log xi; the walk steps with covariance
// scale_mult^2 * v_hat^{-1}. scale_mult = 0 degenerates to a fixed-xi chain.
struct ProposalSpec {
  int dof = 3;
  double scale_mult = 0.0;  // defaulted to 2.4 / sqrt(r) by proposal_covariance
  Eigen::MatrixXd v_hat;
};

ProposalSpec proposal_covariance(const mle::MleResult& fit);

struct ChainControls {
  long iterations = 10000;
  long burn_in = 500;
  std::uint64_t seed = 1;
  ProposalSpec proposal;
  bool step2_literal = false;  // variance-step rate from y instead of the residual
  std::optional<double> init_sigma_sq;
  std::optional<Eigen::VectorXd> init_xi;
  Path path = Path::automatic;
};

struct Chain {
  Eigen::MatrixXd draws;  // stored states, columns theta_1..q, sigma_sq, xi_1..r
  std::vector<std::uint8_t> accepted;
  std::vector<long> iteration;  // global index of each stored state
  long total_iterations = 0;
  long burn_in = 0;
  long accept_count = 0;       // over all iterations
  long auto_reject_count = 0;  // proposals with a non-finite target
  std::uint64_t seed = 0;
  priors::PriorKind prior_kind = priors::PriorKind::reference;
  int q = 1;
  int r = 1;

  double accept_rate() const {
    return total_iterations == 0
               ? 0.0
               : static_cast<double>(accept_count) / static_cast<double>(total_iterations);
  }
  Eigen::VectorXd column(const std::string& name) const;
  std::vector<std::string> column_names() const;
};

// Step 1: exact Gaussian draw of the mean coefficients given (sigma_sq, xi).
Eigen::VectorXd step_theta(const lik::Assembly& a, const GpDataset& data,
                           double sigma_sq, Rng& rng);

// Step 2: exact inverse-gamma draw of the variance given (theta, xi);
// shape n/2 + a - 1, rate e' Sigma^{-1} e / 2 plus the empirical Bayes
// exponential rate when applicable. `literal_y_form` swaps the residual for
// the raw response in the rate (comparison switch, see README).
double step_sigma2(const lik::Assembly& a, const GpDataset& data,
                   const Eigen::VectorXd& theta, const priors::PriorSpec& prior,
                   bool literal_y_form, Rng& rng);

// Step 3 machinery: multivariate-t random walk on log(xi) targeting
// exp(log_target) on the positive orthant. log_target excludes the log-scale
// Jacobian; the step accounts for it. A non-finite target at the proposal
// auto-rejects. Returns the new point and the bookkeeping flags.
struct XiStepResult {
  Eigen::VectorXd xi;
  double log_target;
  bool accepted = false;
  bool auto_rejected = false;
};
XiStepResult step_xi(const std::function<double(const Eigen::VectorXd&)>& log_target,
                     const Eigen::VectorXd& xi_old, double log_target_old,
                     const ProposalSpec& prop, Rng& rng);

Chain run_chain(const GpDataset& data, const priors::PriorSpec& prior,
                const ChainControls& controls);

// Equal-tailed summaries from empirical quantiles (linear interpolation).
struct IntervalSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
};
IntervalSummary summarize_column(Eigen::VectorXd draws, double gamma);

struct ParamSummary {
  std::string name;
  IntervalSummary interval;
};
std::vector<ParamSummary> summarize(const Chain& chain, double gamma);

// Chain persistence: CSV with header iter,theta_*,sigma_sq,xi_*,accepted plus
// a key-value sidecar with seed, prior and controls. comment_lines go into
// the CSV as leading '#' rows (the loader skips them).
void write_chain(const Chain& chain, const std::string& csv_path,
                 const std::string& meta_path,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta = {},
                 const std::vector<std::string>& comment_lines = {});
Chain load_chain(const std::string& csv_path);

}  // namespace gpsep::mcmc

#endif
