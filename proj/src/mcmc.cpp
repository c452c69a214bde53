#include "gpsep/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpsep/common.hpp"

namespace gpsep::mcmc {

namespace {

// substream tags of the versioned splitting rule
constexpr std::uint64_t kTagTheta = 1;
constexpr std::uint64_t kTagSigma = 2;
constexpr std::uint64_t kTagXi = 3;

}  // namespace

ProposalSpec proposal_covariance(const mle::MleResult& fit) {
  const int r = static_cast<int>(fit.xi_hat.size());
  if (fit.info.matrix.rows() != r + 1)
    throw InputError("proposal_covariance: information matrix has wrong size");

  // change of variables to (log sigma_sq, log xi): J I J with J = diag(estimates)
  Eigen::VectorXd jac(r + 1);
  jac(0) = fit.sigma_sq_hat;
  jac.tail(r) = fit.xi_hat;
  const Eigen::MatrixXd info_log =
      jac.asDiagonal() * fit.info.matrix * jac.asDiagonal();

  const double u = info_log(0, 0);
  const Eigen::VectorXd v = info_log.col(0).tail(r);
  const Eigen::MatrixXd a = info_log.bottomRightCorner(r, r);
  if (!(u > 0.0))
    throw NumericalError("proposal_covariance: information in log sigma_sq is not positive; "
                         "re-run the maximum likelihood fit");

  ProposalSpec prop;
  prop.dof = 3;
  prop.scale_mult = 2.4 / std::sqrt(static_cast<double>(r));
  prop.v_hat = a - (v * v.transpose()) / u;
  Eigen::LLT<Eigen::MatrixXd> llt(prop.v_hat);
  if (llt.info() != Eigen::Success)
    throw NumericalError("proposal_covariance: V-hat is not positive definite; "
                         "re-run the maximum likelihood fit");
  return prop;
}

Eigen::VectorXd step_theta(const lik::Assembly& a, const GpDataset& data,
                           double sigma_sq, Rng& rng) {
  if (!(sigma_sq > 0.0)) throw InputError("step_theta: sigma_sq must be positive");
  const double sigma = std::sqrt(sigma_sq);
  if (a.structured) {
    const double sd = sigma / std::sqrt(a.m_prod);
    return Eigen::VectorXd::Constant(1, a.theta_hat(0) + sd * rng.normal());
  }
  Eigen::VectorXd z(data.q());
  for (int j = 0; j < data.q(); ++j) z(j) = rng.normal();
  // covariance sigma_sq (X'S^{-1}X)^{-1}; sample via the upper-triangular solve
  a.xtsx_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
  return a.theta_hat + sigma * z;
}

double step_sigma2(const lik::Assembly& a, const GpDataset& data,
                   const Eigen::VectorXd& theta, const priors::PriorSpec& prior,
                   bool literal_y_form, Rng& rng) {
  const double shape = 0.5 * static_cast<double>(a.n) + prior.a_exponent - 1.0;
  if (!(shape > 0.0)) throw InputError("step_sigma2: inverse-gamma shape is not positive");
  double quad;
  if (literal_y_form) {
    quad = a.y_sinv_y;
  } else {
    const Eigen::VectorXd e = a.residual(data, theta);
    quad = a.sigma_quadform(e);
  }
  double rate = 0.5 * quad;
  if (prior.kind == priors::PriorKind::empirical_bayes) {
    if (!prior.rates) throw InputError("step_sigma2: empirical Bayes prior lacks rates");
    rate += prior.rates->precision_rate;
  }
  if (!(rate > 0.0))
    throw NumericalError("step_sigma2: inverse-gamma rate is zero (degenerate data)");
  const double g = rng.gamma(shape);
  return rate / g;
}

XiStepResult step_xi(const std::function<double(const Eigen::VectorXd&)>& log_target,
                     const Eigen::VectorXd& xi_old, double log_target_old,
                     const ProposalSpec& prop, Rng& rng) {
  XiStepResult out;
  if (prop.scale_mult == 0.0) {  // degenerate fixed-xi chain
    out.xi = xi_old;
    out.log_target = log_target_old;
    out.accepted = true;
    return out;
  }
  const int r = static_cast<int>(xi_old.size());
  if (prop.v_hat.rows() != r)
    throw InputError("step_xi: proposal matrix does not match the range dimension");

  // walk covariance c^2 V^{-1}: with V = L L', the factor is L^{-T}
  Eigen::LLT<Eigen::MatrixXd> llt(prop.v_hat);
  if (llt.info() != Eigen::Success)
    throw NumericalError("step_xi: proposal matrix is not positive definite");
  Eigen::VectorXd z(r);
  for (int k = 0; k < r; ++k) z(k) = rng.normal();
  Eigen::MatrixXd l = llt.matrixL();
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
  const double w = rng.chi_squared(static_cast<double>(prop.dof)) /
                   static_cast<double>(prop.dof);

  const Eigen::VectorXd log_old = xi_old.array().log();
  const Eigen::VectorXd delta = log_old + (prop.scale_mult / std::sqrt(w)) * z;
  const Eigen::VectorXd xi_star = delta.array().exp();

  double lt_star;
  bool finite = true;
  try {
    lt_star = log_target(xi_star);
    if (!std::isfinite(lt_star)) finite = false;
  } catch (const NumericalError&) {
    finite = false;
    lt_star = 0.0;
  }
  if (!finite || !xi_star.allFinite() || (xi_star.array() <= 0.0).any()) {
    out.xi = xi_old;
    out.log_target = log_target_old;
    out.auto_rejected = true;
    return out;
  }

  // symmetric t kernel in log coordinates: the ratio keeps only the Jacobian
  const double log_rho =
      (lt_star + delta.sum()) - (log_target_old + log_old.sum());
  if (std::log(rng.uniform()) < log_rho) {
    out.xi = xi_star;
    out.log_target = lt_star;
    out.accepted = true;
  } else {
    out.xi = xi_old;
    out.log_target = log_target_old;
  }
  return out;
}

Chain run_chain(const GpDataset& data, const priors::PriorSpec& prior,
                const ChainControls& controls) {
  if (controls.iterations <= 0) throw InputError("run_chain: iterations must be positive");
  if (controls.burn_in < 0 || controls.burn_in >= controls.iterations)
    throw InputError("run_chain: burn-in must lie in [0, iterations)");
  const int q = data.q();
  const int r = data.r();

  Eigen::VectorXd xi = controls.init_xi ? *controls.init_xi : mle::default_init_xi(data);
  if (xi.size() != r) throw InputError("run_chain: initial range vector length mismatch");
  double sigma_sq;
  if (controls.init_sigma_sq) {
    sigma_sq = *controls.init_sigma_sq;
  } else {
    const double mean = data.y().mean();
    sigma_sq = (data.y().array() - mean).square().sum() /
               std::max<double>(1.0, static_cast<double>(data.n() - 1));
  }
  if (!(sigma_sq > 0.0)) throw InputError("run_chain: initial sigma_sq must be positive");

  lik::AssemblyPtr assembly = lik::assemble(data, xi, controls.path);
  Eigen::VectorXd theta = assembly->theta_hat;

  // log prior over xi alone; it depends on xi only, so cache it per state
  const bool eb = prior.kind == priors::PriorKind::empirical_bayes;
  const auto xi_log_prior = [&](const lik::Assembly& a,
                                const Eigen::VectorXd& point) -> double {
    return eb ? priors::eb_xi_log_prior(point, prior)
              : priors::formal_log_prior(a, data, prior.kind);
  };
  double log_prior_cur = xi_log_prior(*assembly, xi);

  Chain chain;
  chain.total_iterations = controls.iterations;
  chain.burn_in = controls.burn_in;
  chain.seed = controls.seed;
  chain.prior_kind = prior.kind;
  chain.q = q;
  chain.r = r;
  const long stored = controls.iterations - controls.burn_in;
  chain.draws.resize(stored, q + 1 + r);
  chain.accepted.resize(static_cast<std::size_t>(stored));
  chain.iteration.resize(static_cast<std::size_t>(stored));

  for (long iter = 0; iter < controls.iterations; ++iter) {
    Rng rng_theta = derive_stream(controls.seed, static_cast<std::uint64_t>(iter), kTagTheta);
    theta = step_theta(*assembly, data, sigma_sq, rng_theta);

    Rng rng_sigma = derive_stream(controls.seed, static_cast<std::uint64_t>(iter), kTagSigma);
    sigma_sq = step_sigma2(*assembly, data, theta, prior, controls.step2_literal, rng_sigma);

    Rng rng_xi = derive_stream(controls.seed, static_cast<std::uint64_t>(iter), kTagXi);
    lik::AssemblyPtr proposal_assembly;
    double proposal_log_prior = 0.0;
    const auto log_target = [&](const Eigen::VectorXd& point) -> double {
      proposal_assembly = lik::assemble(data, point, controls.path);
      proposal_log_prior = xi_log_prior(*proposal_assembly, point);
      return lik::log_likelihood(*proposal_assembly, data, theta, sigma_sq) +
             proposal_log_prior;
    };
    const double lt_old =
        lik::log_likelihood(*assembly, data, theta, sigma_sq) + log_prior_cur;
    const XiStepResult step = step_xi(log_target, xi, lt_old, controls.proposal, rng_xi);
    if (step.accepted && proposal_assembly) {
      assembly = proposal_assembly;
      log_prior_cur = proposal_log_prior;
      xi = step.xi;
    }
    if (step.accepted) ++chain.accept_count;
    if (step.auto_rejected) ++chain.auto_reject_count;

    if (iter >= controls.burn_in) {
      const long row = iter - controls.burn_in;
      for (int j = 0; j < q; ++j) chain.draws(row, j) = theta(j);
      chain.draws(row, q) = sigma_sq;
      for (int k = 0; k < r; ++k) chain.draws(row, q + 1 + k) = xi(k);
      chain.accepted[static_cast<std::size_t>(row)] = step.accepted ? 1 : 0;
      chain.iteration[static_cast<std::size_t>(row)] = iter;
      if (!chain.draws.row(row).allFinite() || !(sigma_sq > 0.0) ||
          (xi.array() <= 0.0).any())
        throw NumericalError("run_chain: non-finite or non-positive state entered the chain");
    }
  }
  return chain;
}

std::vector<std::string> Chain::column_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < q; ++j) names.push_back("theta_" + std::to_string(j + 1));
  names.push_back("sigma_sq");
  for (int k = 0; k < r; ++k) names.push_back("xi_" + std::to_string(k + 1));
  return names;
}

Eigen::VectorXd Chain::column(const std::string& name) const {
  const auto names = column_names();
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return draws.col(static_cast<long>(j));
  throw InputError("Chain::column: unknown column '" + name + "'");
}

IntervalSummary summarize_column(Eigen::VectorXd draws, double gamma) {
  if (draws.size() == 0) throw InputError("summarize_column: empty chain");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("summarize_column: gamma in (0,1)");
  IntervalSummary s;
  s.mean = draws.mean();
  std::sort(draws.data(), draws.data() + draws.size());
  const auto quantile = [&](double p) {
    const double h = p * static_cast<double>(draws.size() - 1);
    const long lo = static_cast<long>(std::floor(h));
    const long hi = std::min<long>(lo + 1, draws.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return draws(lo) + frac * (draws(hi) - draws(lo));
  };
  s.lower = quantile(0.5 * gamma);
  s.upper = quantile(1.0 - 0.5 * gamma);
  return s;
}

std::vector<ParamSummary> summarize(const Chain& chain, double gamma) {
  if (chain.draws.rows() == 0) throw InputError("summarize: empty chain");
  std::vector<ParamSummary> out;
  const auto names = chain.column_names();
  for (std::size_t j = 0; j < names.size(); ++j)
    out.push_back({names[j], summarize_column(chain.draws.col(static_cast<long>(j)), gamma)});
  return out;
}

void write_chain(const Chain& chain, const std::string& csv_path,
                 const std::string& meta_path,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta,
                 const std::vector<std::string>& comment_lines) {
  std::ofstream csv(csv_path);
  if (!csv) throw InputError("write_chain: cannot open '" + csv_path + "'");
  csv.precision(17);
  for (const auto& line : comment_lines) csv << "# " << line << "\n";
  csv << "iter";
  for (const auto& name : chain.column_names()) csv << "," << name;
  csv << ",accepted\n";
  for (long row = 0; row < chain.draws.rows(); ++row) {
    csv << chain.iteration[static_cast<std::size_t>(row)];
    for (long j = 0; j < chain.draws.cols(); ++j) csv << "," << chain.draws(row, j);
    csv << "," << static_cast<int>(chain.accepted[static_cast<std::size_t>(row)]) << "\n";
  }

  std::ofstream meta(meta_path);
  if (!meta) throw InputError("write_chain: cannot open '" + meta_path + "'");
  meta << "seed = " << chain.seed << "\n";
  meta << "prior = " << priors::prior_name(chain.prior_kind) << "\n";
  meta << "iterations = " << chain.total_iterations << "\n";
  meta << "burn_in = " << chain.burn_in << "\n";
  meta << "accept_count = " << chain.accept_count << "\n";
  meta << "auto_reject_count = " << chain.auto_reject_count << "\n";
  meta << "rng_stream_version = " << kRngStreamVersion << "\n";
  for (const auto& [key, value] : extra_meta) meta << key << " = " << value << "\n";
}

Chain load_chain(const std::string& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw InputError("load_chain: cannot open '" + csv_path + "'");
  std::string line;
  std::vector<std::string> header;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    break;
  }
  if (header.size() < 4 || header.front() != "iter" || header.back() != "accepted")
    throw InputError("load_chain: '" + csv_path + "' is not a chain file");

  Chain chain;
  int q = 0, r = 0;
  for (const auto& name : header) {
    if (name.rfind("theta_", 0) == 0) ++q;
    if (name.rfind("xi_", 0) == 0) ++r;
  }
  chain.q = q;
  chain.r = r;

  std::vector<std::vector<double>> rows;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != header.size())
      throw InputError("load_chain: ragged row in '" + csv_path + "'");
    rows.push_back(std::move(row));
  }
  const long m = static_cast<long>(rows.size());
  chain.draws.resize(m, q + 1 + r);
  chain.accepted.resize(static_cast<std::size_t>(m));
  chain.iteration.resize(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    chain.iteration[static_cast<std::size_t>(i)] = static_cast<long>(row.front());
    for (int j = 0; j < q + 1 + r; ++j)
      chain.draws(i, j) = row[static_cast<std::size_t>(j + 1)];
    chain.accepted[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(row.back() != 0.0);
    if (chain.accepted[static_cast<std::size_t>(i)]) ++chain.accept_count;
  }
  chain.total_iterations = m;
  return chain;
}

}  // namespace gpsep::mcmc
