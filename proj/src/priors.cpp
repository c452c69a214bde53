#include "gpsep/priors.hpp"

#include <cmath>
#include <sstream>

#include "gpsep/common.hpp"

namespace gpsep::priors {

std::string prior_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::reference: return "reference";
    case PriorKind::indep_jeffreys: return "indep_jeffreys";
    case PriorKind::jeffreys_rule: return "jeffreys_rule";
    case PriorKind::empirical_bayes: return "empirical_bayes";
  }
  return "unknown";
}

PriorKind prior_from_name(const std::string& name) {
  if (name == "reference") return PriorKind::reference;
  if (name == "indep_jeffreys") return PriorKind::indep_jeffreys;
  if (name == "jeffreys_rule") return PriorKind::jeffreys_rule;
  if (name == "empirical_bayes") return PriorKind::empirical_bayes;
  throw InputError("unknown prior kind '" + name + "'");
}

PriorSpec PriorSpec::reference() { return {PriorKind::reference, 1.0, std::nullopt}; }

PriorSpec PriorSpec::indep_jeffreys() {
  return {PriorKind::indep_jeffreys, 1.0, std::nullopt};
}

PriorSpec PriorSpec::jeffreys_rule(int q) {
  if (q < 1) throw InputError("jeffreys_rule: q must be positive");
  return {PriorKind::jeffreys_rule, 1.0 + 0.5 * static_cast<double>(q), std::nullopt};
}

PriorSpec PriorSpec::empirical_bayes(double sigma_sq_hat, const Eigen::VectorXd& xi_hat,
                                     double multiplier) {
  if (!(sigma_sq_hat > 0.0) || !(multiplier > 0.0))
    throw InputError("empirical_bayes: estimates and multiplier must be positive");
  EbRates rates;
  // prior mean = multiplier * estimate, so rate = 1 / (multiplier * estimate);
  // the precision estimate is 1 / sigma_sq_hat
  rates.precision_rate = sigma_sq_hat / multiplier;
  rates.xi_rates.resize(xi_hat.size());
  for (long k = 0; k < xi_hat.size(); ++k) {
    if (!(xi_hat(k) > 0.0))
      throw InputError("empirical_bayes: range estimates must be positive");
    rates.xi_rates(k) = 1.0 / (multiplier * xi_hat(k));
  }
  return {PriorKind::empirical_bayes, 2.0, rates};
}

namespace {

// per-factor ingredients of the trace identities
struct FactorTraces {
  Eigen::VectorXd t;    // tr dSigma_k Sigma_k^{-1}
  Eigen::VectorXd tt;   // tr (dSigma_k Sigma_k^{-1})^2
  Eigen::VectorXd s;    // tr dSigma_k Phi_k
  Eigen::VectorXd c;    // tr dSigma_k Sigma_k^{-1} dSigma_k Phi_k
  Eigen::VectorXd n_co; // n_(k) = n / n_k
};

FactorTraces factor_traces(const lik::Assembly& a, const GpDataset& data) {
  const int r = data.r();
  FactorTraces ft;
  ft.t.resize(r);
  ft.tt.resize(r);
  ft.s.resize(r);
  ft.c.resize(r);
  ft.n_co.resize(r);
  const auto derivs = data.factor_sigma_derivs(a.xi);
  for (int k = 0; k < r; ++k) {
    const Eigen::MatrixXd& dot = derivs[static_cast<std::size_t>(k)];
    const auto& l = a.fchol->lower(k);
    Eigen::MatrixXd z = dot;  // Sigma_k^{-1} dSigma_k
    l.triangularView<Eigen::Lower>().solveInPlace(z);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    ft.t(k) = z.trace();
    ft.tt(k) = (z.array() * z.transpose().array()).sum();
    const Eigen::VectorXd& uk = a.u[static_cast<std::size_t>(k)];
    const double mk = a.m(k);
    const Eigen::VectorXd w = dot * uk;
    ft.s(k) = uk.dot(w) / mk;
    Eigen::VectorXd v = w;
    l.triangularView<Eigen::Lower>().solveInPlace(v);
    ft.c(k) = v.squaredNorm() / mk;  // w' Sigma_k^{-1} w / m_k
    ft.n_co(k) = static_cast<double>(a.n) / static_cast<double>(a.sigma[static_cast<std::size_t>(k)].rows());
  }
  return ft;
}

TraceSet structured_w(const lik::Assembly& a, const GpDataset& data) {
  const FactorTraces ft = factor_traces(a, data);
  const int r = data.r();
  TraceSet ts;
  ts.tr.resize(r);
  ts.tr_sq.resize(r);
  ts.cross.resize(r, r);
  for (int k = 0; k < r; ++k) {
    ts.tr(k) = ft.n_co(k) * ft.t(k) - ft.s(k);
    ts.tr_sq(k) = ft.n_co(k) * ft.tt(k) + ft.s(k) * ft.s(k) - 2.0 * ft.c(k);
    ts.cross(k, k) = ts.tr_sq(k);
  }
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const double n_ij =
          static_cast<double>(a.n) /
          static_cast<double>(a.sigma[static_cast<std::size_t>(i)].rows() *
                              a.sigma[static_cast<std::size_t>(j)].rows());
      const double v = n_ij * ft.t(i) * ft.t(j) - ft.s(i) * ft.s(j);
      ts.cross(i, j) = v;
      ts.cross(j, i) = v;
    }
  return ts;
}

TraceSet structured_u(const lik::Assembly& a, const GpDataset& data) {
  const FactorTraces ft = factor_traces(a, data);
  const int r = data.r();
  TraceSet ts;
  ts.tr.resize(r);
  ts.tr_sq.resize(r);
  ts.cross.resize(r, r);
  for (int k = 0; k < r; ++k) {
    ts.tr(k) = ft.n_co(k) * ft.t(k);
    ts.tr_sq(k) = ft.n_co(k) * ft.tt(k);
    ts.cross(k, k) = ts.tr_sq(k);
  }
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const double n_ij =
          static_cast<double>(a.n) /
          static_cast<double>(a.sigma[static_cast<std::size_t>(i)].rows() *
                              a.sigma[static_cast<std::size_t>(j)].rows());
      const double v = n_ij * ft.t(i) * ft.t(j);
      ts.cross(i, j) = v;
      ts.cross(j, i) = v;
    }
  return ts;
}

// dense route: explicit W_k / U_k products
TraceSet dense_traces(const lik::Assembly& a, const GpDataset& data, bool with_projector) {
  const long n = a.n;
  const int r = data.r();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sigma_inv = identity;
  a.lower.triangularView<Eigen::Lower>().solveInPlace(sigma_inv);
  a.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(sigma_inv);

  Eigen::MatrixXd q_mat = sigma_inv;
  if (with_projector) {
    Eigen::MatrixXd coef = a.sinv_x.transpose();  // q x n
    a.xtsx_lower.triangularView<Eigen::Lower>().solveInPlace(coef);
    a.xtsx_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(coef);
    q_mat -= a.sinv_x * coef;
  }

  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k)
    mats.push_back(data.dense_sigma_deriv(a.xi, k) * q_mat);

  TraceSet ts;
  ts.tr.resize(r);
  ts.tr_sq.resize(r);
  ts.cross.resize(r, r);
  for (int i = 0; i < r; ++i) {
    ts.tr(i) = mats[static_cast<std::size_t>(i)].trace();
    for (int j = i; j < r; ++j) {
      const double v = (mats[static_cast<std::size_t>(i)].array() *
                        mats[static_cast<std::size_t>(j)].transpose().array())
                           .sum();
      ts.cross(i, j) = v;
      ts.cross(j, i) = v;
    }
    ts.tr_sq(i) = ts.cross(i, i);
  }
  return ts;
}

Eigen::MatrixXd prior_information(double lead, const TraceSet& ts) {
  const int r = static_cast<int>(ts.tr.size());
  Eigen::MatrixXd info(r + 1, r + 1);
  info(0, 0) = lead;
  for (int k = 0; k < r; ++k) {
    info(0, k + 1) = ts.tr(k);
    info(k + 1, 0) = ts.tr(k);
  }
  info.block(1, 1, r, r) = ts.cross;
  return info;
}

double half_logdet_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || d.minCoeff() <= 1e-12 * dmax) {
    std::ostringstream msg;
    msg << what << " information matrix is not positive definite; "
        << "the design is degenerate for this prior";
    throw NumericalError(msg.str());
  }
  return 0.5 * d.array().log().sum();
}

}  // namespace

TraceSet w_traces(const lik::Assembly& a, const GpDataset& data) {
  return a.structured ? structured_w(a, data) : dense_traces(a, data, true);
}

TraceSet u_traces(const lik::Assembly& a, const GpDataset& data) {
  return a.structured ? structured_u(a, data) : dense_traces(a, data, false);
}

TraceSet w_traces(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  return w_traces(*lik::assemble(data, xi, path), data);
}

TraceSet u_traces(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  return u_traces(*lik::assemble(data, xi, path), data);
}

double formal_log_prior(const lik::Assembly& a, const GpDataset& data, PriorKind kind) {
  switch (kind) {
    case PriorKind::reference: {
      if (a.n <= a.q) throw InputError("reference prior requires n > q");
      const TraceSet ts = w_traces(a, data);
      return half_logdet_pd(prior_information(static_cast<double>(a.n - a.q), ts),
                            "reference prior");
    }
    case PriorKind::indep_jeffreys: {
      const TraceSet ts = u_traces(a, data);
      return half_logdet_pd(prior_information(static_cast<double>(a.n), ts),
                            "independence Jeffreys");
    }
    case PriorKind::jeffreys_rule:
      return formal_log_prior(a, data, PriorKind::indep_jeffreys) + 0.5 * a.logdet_xtsx;
    case PriorKind::empirical_bayes:
      break;
  }
  throw InputError("formal_log_prior: empirical Bayes has no formal density here");
}

double reference_log_prior(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  return formal_log_prior(*lik::assemble(data, xi, path), data, PriorKind::reference);
}

double jeffreys_ind_log_prior(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  return formal_log_prior(*lik::assemble(data, xi, path), data, PriorKind::indep_jeffreys);
}

double jeffreys_rule_log_prior(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  return formal_log_prior(*lik::assemble(data, xi, path), data, PriorKind::jeffreys_rule);
}

double empirical_bayes_log_prior(double precision, const Eigen::VectorXd& xi,
                                 const PriorSpec& spec) {
  if (spec.kind != PriorKind::empirical_bayes || !spec.rates)
    throw InputError("empirical_bayes_log_prior: spec is not an empirical Bayes prior");
  if (!(precision > 0.0)) throw InputError("empirical_bayes_log_prior: precision <= 0");
  const EbRates& rates = *spec.rates;
  double value = std::log(rates.precision_rate) - rates.precision_rate * precision;
  value += eb_xi_log_prior(xi, spec);
  return value;
}

double eb_xi_log_prior(const Eigen::VectorXd& xi, const PriorSpec& spec) {
  if (spec.kind != PriorKind::empirical_bayes || !spec.rates)
    throw InputError("eb_xi_log_prior: spec is not an empirical Bayes prior");
  const EbRates& rates = *spec.rates;
  if (xi.size() != rates.xi_rates.size())
    throw InputError("eb_xi_log_prior: range vector length mismatch");
  double value = 0.0;
  for (long k = 0; k < xi.size(); ++k) {
    if (!(xi(k) > 0.0)) throw InputError("eb_xi_log_prior: ranges must be positive");
    value += std::log(rates.xi_rates(k)) - rates.xi_rates(k) * xi(k);
  }
  return value;
}

double prior_upper_bound_log(const GpDataset& data, const Eigen::VectorXd& xi,
                             PriorKind kind, Path path) {
  const lik::AssemblyPtr a = lik::assemble(data, xi, path);
  switch (kind) {
    case PriorKind::reference: {
      const TraceSet ts = w_traces(*a, data);
      return 0.5 * (std::log(static_cast<double>(a->n - a->q)) +
                    ts.tr_sq.array().log().sum());
    }
    case PriorKind::indep_jeffreys: {
      const TraceSet ts = u_traces(*a, data);
      return 0.5 * (std::log(static_cast<double>(a->n)) + ts.tr_sq.array().log().sum());
    }
    case PriorKind::jeffreys_rule: {
      const TraceSet ts = u_traces(*a, data);
      return 0.5 * (std::log(static_cast<double>(a->n)) + ts.tr_sq.array().log().sum()) +
             0.5 * a->logdet_xtsx;
    }
    case PriorKind::empirical_bayes:
      break;
  }
  throw InputError("prior_upper_bound_log: no factorized bound for empirical Bayes");
}

Eigen::VectorXd per_factor_bound_log(const GpDataset& data, const Eigen::VectorXd& xi,
                                     PriorKind kind) {
  if (!data.structured())
    throw InputError("per_factor_bound_log: requires the structured representation");
  const lik::AssemblyPtr a = lik::assemble(data, xi, Path::automatic);
  const int r = data.r();
  Eigen::VectorXd out(r);
  switch (kind) {
    case PriorKind::reference: {
      const TraceSet ts = w_traces(*a, data);
      out = 0.5 * ts.tr_sq.array().log();
      return out;
    }
    case PriorKind::indep_jeffreys: {
      const TraceSet ts = u_traces(*a, data);
      out = 0.5 * ts.tr_sq.array().log();
      return out;
    }
    case PriorKind::jeffreys_rule: {
      const TraceSet ts = u_traces(*a, data);
      out = 0.5 * ts.tr_sq.array().log() + 0.5 * a->m.array().log();
      return out;
    }
    case PriorKind::empirical_bayes:
      break;
  }
  throw InputError("per_factor_bound_log: no factorized bound for empirical Bayes");
}

}  // namespace gpsep::priors
