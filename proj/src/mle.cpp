#include "gpsep/mle.hpp"

#include <algorithm>
#include <cmath>

#include "gpsep/common.hpp"
#include "gpsep/priors.hpp"

namespace gpsep::mle {

namespace {

// y' Q W_k y = (Qy)' dSigma^k (Qy); structured datasets apply the Kronecker
// derivative factor-wise, dense ones multiply the explicit matrix.
Eigen::VectorXd quadratic_score_terms(const lik::Assembly& a, const GpDataset& data) {
  const Eigen::VectorXd qy = a.apply_q(data.y());
  const int r = data.r();
  Eigen::VectorXd out(r);
  if (a.structured) {
    const auto derivs = data.factor_sigma_derivs(a.xi);
    std::vector<int> dims;
    dims.reserve(a.sigma.size());
    for (const auto& s : a.sigma) dims.push_back(static_cast<int>(s.rows()));
    for (int k = 0; k < r; ++k) {
      std::vector<Eigen::MatrixXd> mats = a.sigma;
      mats[static_cast<std::size_t>(k)] = derivs[static_cast<std::size_t>(k)];
      const Eigen::VectorXd h = kron::kron_apply(mats, dims, qy);
      out(k) = qy.dot(h);
    }
  } else {
    for (int k = 0; k < r; ++k)
      out(k) = qy.dot(data.dense_sigma_deriv(a.xi, k) * qy);
  }
  return out;
}

}  // namespace

Eigen::VectorXd integrated_score(const GpDataset& data, double sigma_sq,
                                 const Eigen::VectorXd& xi, Path path) {
  if (!(sigma_sq > 0.0)) throw InputError("integrated_score: sigma_sq must be positive");
  const lik::AssemblyPtr a = lik::assemble(data, xi, path);
  const priors::TraceSet ts = priors::w_traces(*a, data);
  const Eigen::VectorXd yqwy = quadratic_score_terms(*a, data);
  const double nmq = static_cast<double>(a->n - a->q);
  Eigen::VectorXd score(data.r() + 1);
  score(0) = 0.5 * (a->s_sq / (sigma_sq * sigma_sq) - nmq / sigma_sq);
  for (int k = 0; k < data.r(); ++k)
    score(k + 1) = 0.5 * (yqwy(k) / sigma_sq - ts.tr(k));
  return score;
}

FisherInfo expected_information(const GpDataset& data, double sigma_sq,
                                const Eigen::VectorXd& xi, Path path) {
  if (!(sigma_sq > 0.0)) throw InputError("expected_information: sigma_sq must be positive");
  const lik::AssemblyPtr a = lik::assemble(data, xi, path);
  const priors::TraceSet ts = priors::w_traces(*a, data);
  const int r = data.r();
  const double nmq = static_cast<double>(a->n - a->q);
  FisherInfo info;
  info.matrix.resize(r + 1, r + 1);
  info.matrix(0, 0) = 0.5 * nmq / (sigma_sq * sigma_sq);
  for (int k = 0; k < r; ++k) {
    info.matrix(0, k + 1) = 0.5 * ts.tr(k) / sigma_sq;
    info.matrix(k + 1, 0) = info.matrix(0, k + 1);
  }
  info.matrix.bottomRightCorner(r, r) = 0.5 * ts.cross;
  return info;
}

Eigen::VectorXd default_init_xi(const GpDataset& data) {
  const int r = data.r();
  Eigen::VectorXd xi(r);
  const auto median_distance = [](const Eigen::MatrixXd& loc) {
    std::vector<double> d;
    for (long i = 0; i < loc.rows(); ++i)
      for (long j = i + 1; j < loc.rows(); ++j)
        d.push_back((loc.row(i) - loc.row(j)).norm());
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size();
    return (m % 2 == 1) ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  };
  if (data.grid().is_cartesian()) {
    for (int k = 0; k < r; ++k)
      xi(k) = 1.0 / median_distance(data.grid().factor_locations()[static_cast<std::size_t>(k)]);
  } else {
    long col = 0;
    for (int k = 0; k < r; ++k) {
      const int pk = data.grid().factor_dims()[static_cast<std::size_t>(k)];
      xi(k) = 1.0 /
              median_distance(data.grid().dense_locations().middleCols(col, pk));
      col += pk;
    }
  }
  return xi;
}

namespace {

struct SingleRun {
  MleResult result;
  bool usable = false;
};

SingleRun run_scoring(const GpDataset& data, Eigen::VectorXd xi,
                      const ScoringControls& controls) {
  SingleRun run;
  MleResult& res = run.result;
  const double nmq = static_cast<double>(data.n() - data.q());
  if (nmq <= 0.0) throw InputError("fisher_scoring: requires n > q");

  lik::AssemblyPtr a = lik::assemble(data, xi, controls.path);
  double sigma_sq = a->s_sq / nmq;
  double log_lik = lik::log_integrated_theta(*a, sigma_sq);

  for (int iter = 1; iter <= controls.max_iterations; ++iter) {
    res.iterations = iter;

    const priors::TraceSet ts = priors::w_traces(*a, data);
    const Eigen::VectorXd yqwy = quadratic_score_terms(*a, data);
    Eigen::VectorXd score(data.r());
    for (int k = 0; k < data.r(); ++k)
      score(k) = 0.5 * (yqwy(k) / sigma_sq - ts.tr(k));
    const double grad_norm = score.cwiseAbs().maxCoeff();

    IterationRecord rec{sigma_sq, xi, grad_norm, log_lik, 0.0, 0};

    if (grad_norm < controls.grad_tol) {
      res.trace.push_back(rec);
      res.converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * ts.cross);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-14 * std::abs(d.maxCoeff())))
      throw NumericalError("fisher_scoring: expected information over xi is singular");
    const Eigen::VectorXd step = ldlt.solve(score);

    double lambda = 1.0;
    bool advanced = false;
    for (int h = 0; h <= controls.max_halvings; ++h) {
      Eigen::VectorXd cand = xi;
      int clamped = 0;
      for (int k = 0; k < data.r(); ++k) {
        const double value = xi(k) + lambda * step(k);
        if (std::isfinite(value) && value > 0.0) {
          cand(k) = value;
        } else {
          ++clamped;  // outside the parameter space: keep the old coordinate
        }
      }
      try {
        lik::AssemblyPtr cand_a = lik::assemble(data, cand, controls.path);
        const double cand_ll = lik::log_integrated_theta(*cand_a, sigma_sq);
        if (cand_ll >= log_lik - 1e-12 * std::abs(log_lik)) {
          a = cand_a;
          xi = cand;
          rec.step_scale = lambda;
          rec.clamped = clamped;
          advanced = true;
          break;
        }
      } catch (const NumericalError&) {
        // candidate lost positive definiteness; shrink the step
      }
      lambda *= 0.5;
    }
    res.trace.push_back(rec);
    if (!advanced) break;  // stalled: report non-convergence

    sigma_sq = a->s_sq / nmq;
    log_lik = lik::log_integrated_theta(*a, sigma_sq);
  }

  res.sigma_sq_hat = sigma_sq;
  res.xi_hat = xi;
  res.log_lik = log_lik;
  res.info = expected_information(data, sigma_sq, xi, controls.path);
  run.usable = true;
  return run;
}

}  // namespace

MleResult fisher_scoring(const GpDataset& data, std::optional<Eigen::VectorXd> init_xi,
                         const ScoringControls& controls) {
  const Eigen::VectorXd base = init_xi ? *init_xi : default_init_xi(data);
  for (long k = 0; k < base.size(); ++k)
    if (!(base(k) > 0.0)) throw InputError("fisher_scoring: initial ranges must be positive");

  std::vector<Eigen::VectorXd> starts{base};
  if (controls.multistart) {
    starts.push_back(0.1 * base);
    starts.push_back(10.0 * base);
  }

  std::optional<MleResult> best;
  std::string last_error = "fisher_scoring: no start point was usable";
  for (const auto& start : starts) {
    try {
      SingleRun run = run_scoring(data, start, controls);
      if (!run.usable) continue;
      const bool better =
          !best ||
          (run.result.converged && !best->converged) ||
          (run.result.converged == best->converged && run.result.log_lik > best->log_lik);
      if (better) best = std::move(run.result);
    } catch (const NumericalError& err) {
      last_error = err.what();
    }
  }
  if (!best) throw NumericalError(last_error);
  return *best;
}

}  // namespace gpsep::mle
