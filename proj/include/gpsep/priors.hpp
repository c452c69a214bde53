#ifndef GPSEP_PRIORS_HPP
#define GPSEP_PRIORS_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gpsep/likelihood.hpp"
#include "gpsep/model.hpp"

namespace gpsep::priors {

enum class PriorKind { reference, indep_jeffreys, jeffreys_rule, empirical_bayes };

std::string prior_name(PriorKind kind);
PriorKind prior_from_name(const std::string& name);

// Rates of the proper exponential priors used by the empirical Bayes method;
// one for the precision 1/sigma_sq, one per range component. Centering the
// prior means at multiplier * (ML estimate) gives rate = 1 / (multiplier * est).
struct EbRates {
  double precision_rate;
  Eigen::VectorXd xi_rates;
};

// Which prior is in play and the variance exponent `a` it implies:
// 1 for reference and independence Jeffreys, 1 + q/2 for Jeffreys-rule,
// 2 by convention for empirical Bayes.
struct PriorSpec {
  PriorKind kind;
  double a_exponent;
  std::optional<EbRates> rates;

  static PriorSpec reference();
  static PriorSpec indep_jeffreys();
  static PriorSpec jeffreys_rule(int q);
  static PriorSpec empirical_bayes(double sigma_sq_hat, const Eigen::VectorXd& xi_hat,
                                   double multiplier = 10.0);
};

// Traces of W_k = dSigma^k Q (w_traces) or U_k = dSigma^k Sigma^{-1} (u_traces):
// tr M_k, tr M_k^2 and the symmetric cross matrix tr M_i M_j (its diagonal
// repeats tr M_k^2). The structured route never forms an n x n matrix; each
// trace reduces to per-factor quantities.
struct TraceSet {
  Eigen::VectorXd tr;
  Eigen::VectorXd tr_sq;
  Eigen::MatrixXd cross;
};

TraceSet w_traces(const GpDataset& data, const Eigen::VectorXd& xi,
                  Path path = Path::automatic);
TraceSet u_traces(const GpDataset& data, const Eigen::VectorXd& xi,
                  Path path = Path::automatic);
TraceSet w_traces(const lik::Assembly& a, const GpDataset& data);
TraceSet u_traces(const lik::Assembly& a, const GpDataset& data);

// log pi(xi) for the three formal priors, each defined up to an additive
// constant (the priors are improper; samplers consume differences only).
double reference_log_prior(const GpDataset& data, const Eigen::VectorXd& xi,
                           Path path = Path::automatic);
double jeffreys_ind_log_prior(const GpDataset& data, const Eigen::VectorXd& xi,
                              Path path = Path::automatic);
double jeffreys_rule_log_prior(const GpDataset& data, const Eigen::VectorXd& xi,
                               Path path = Path::automatic);

// assembly-reusing variant for hot loops; kind must be a formal prior
double formal_log_prior(const lik::Assembly& a, const GpDataset& data, PriorKind kind);

// Joint log density of the exponential priors at (precision, xi).
double empirical_bayes_log_prior(double precision, const Eigen::VectorXd& xi,
                                 const PriorSpec& spec);
// xi-part only (the precision factor is handled conjugately by the sampler)
double eb_xi_log_prior(const Eigen::VectorXd& xi, const PriorSpec& spec);

// log of the factorized upper bound: the formal prior never exceeds
// prod_k pi_k(xi_k) with a single (n - q) or n leading scalar.
double prior_upper_bound_log(const GpDataset& data, const Eigen::VectorXd& xi,
                             PriorKind kind, Path path = Path::automatic);

// log pi_k(xi_k) of the per-factor bound terms (excludes the leading scalar);
// used by small-range decay diagnostics.
Eigen::VectorXd per_factor_bound_log(const GpDataset& data, const Eigen::VectorXd& xi,
                                     PriorKind kind);

}  // namespace gpsep::priors

#endif
