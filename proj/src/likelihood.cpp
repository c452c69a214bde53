#include "gpsep/likelihood.hpp"

#include <cmath>

#include "gpsep/common.hpp"

namespace gpsep::lik {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Eigen::VectorXd Assembly::sigma_solve(const Eigen::VectorXd& v) const {
  if (structured) return fchol->solve(v);
  Eigen::VectorXd w = v;
  lower.triangularView<Eigen::Lower>().solveInPlace(w);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
  return w;
}

double Assembly::sigma_quadform(const Eigen::VectorXd& v) const {
  if (structured) return fchol->quadratic_form(v);
  Eigen::VectorXd w = v;
  lower.triangularView<Eigen::Lower>().solveInPlace(w);
  return w.squaredNorm();
}

Eigen::VectorXd Assembly::apply_q(const Eigen::VectorXd& v) const {
  if (structured) return sigma_solve(v) - kx * (kx.dot(v) / m_prod);
  const Eigen::VectorXd xv = sinv_x.transpose() * v;
  Eigen::VectorXd coef = xv;
  xtsx_lower.triangularView<Eigen::Lower>().solveInPlace(coef);
  xtsx_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(coef);
  return sigma_solve(v) - sinv_x * coef;
}

Eigen::VectorXd Assembly::residual(const GpDataset& data, const Eigen::VectorXd& theta) const {
  if (theta.size() != q) throw InputError("residual: theta length does not match q");
  if (structured) return data.y() - xcol * theta(0);
  return data.y() - x * theta;
}

namespace {

AssemblyPtr assemble_structured(const GpDataset& data, const Eigen::VectorXd& xi) {
  auto a = std::make_shared<Assembly>();
  a->structured = true;
  a->xi = xi;
  a->n = data.n();
  a->q = 1;
  a->sigma = data.factor_sigmas(xi);
  a->fchol.emplace(a->sigma);
  a->logdet_sigma = a->fchol->log_det();

  const int r = data.r();
  a->u.reserve(static_cast<std::size_t>(r));
  a->m.resize(r);
  for (int k = 0; k < r; ++k) {
    const Eigen::VectorXd& xk = data.x_factors()[static_cast<std::size_t>(k)];
    const auto& l = a->fchol->lower(k);
    Eigen::VectorXd uk = xk;
    l.triangularView<Eigen::Lower>().solveInPlace(uk);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(uk);
    a->u.push_back(uk);
    a->m(k) = xk.dot(uk);
    if (!(a->m(k) > 0.0))
      throw NumericalError("gls_auxiliaries: X_k' Sigma_k^{-1} X_k is not positive");
    a->m_prod *= a->m(k);
  }
  a->logdet_xtsx = a->m.array().log().sum();

  // materialize (x)u_k and (x)X_k once; both are O(n)
  auto kron_vec = [](const std::vector<Eigen::VectorXd>& vs) {
    Eigen::VectorXd out = vs[0];
    for (std::size_t k = 1; k < vs.size(); ++k) {
      Eigen::VectorXd next(out.size() * vs[k].size());
      for (long i = 0; i < out.size(); ++i)
        next.segment(i * vs[k].size(), vs[k].size()) = out(i) * vs[k];
      out = std::move(next);
    }
    return out;
  };
  a->kx = kron_vec(a->u);
  a->xcol = kron_vec(data.x_factors());

  const double xty = a->kx.dot(data.y());  // X' Sigma^{-1} y
  a->theta_hat = Eigen::VectorXd::Constant(1, xty / a->m_prod);
  const Eigen::VectorXd e = data.y() - a->xcol * a->theta_hat(0);
  a->s_sq = a->fchol->quadratic_form(e);
  a->y_sinv_y = a->fchol->quadratic_form(data.y());
  return a;
}

AssemblyPtr assemble_dense(const GpDataset& data, const Eigen::VectorXd& xi) {
  auto a = std::make_shared<Assembly>();
  a->structured = false;
  a->xi = xi;
  a->n = data.n();
  a->q = data.q();
  a->sigma_dense = data.dense_sigma(xi);
  a->lower = kron::jittered_cholesky(a->sigma_dense, "dense correlation matrix").lower;
  a->logdet_sigma = 2.0 * a->lower.diagonal().array().log().sum();

  a->x = data.design_matrix();
  a->sinv_x = a->x;
  for (int j = 0; j < a->q; ++j) {
    Eigen::VectorXd col = a->sinv_x.col(j);
    a->lower.triangularView<Eigen::Lower>().solveInPlace(col);
    a->lower.transpose().triangularView<Eigen::Upper>().solveInPlace(col);
    a->sinv_x.col(j) = col;
  }
  a->xtsx = a->x.transpose() * a->sinv_x;
  Eigen::LLT<Eigen::MatrixXd> llt(a->xtsx);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gls_auxiliaries: X' Sigma^{-1} X is rank deficient");
  a->xtsx_lower = llt.matrixL();
  a->logdet_xtsx = 2.0 * a->xtsx_lower.diagonal().array().log().sum();

  a->theta_hat = llt.solve(a->sinv_x.transpose() * data.y());
  const Eigen::VectorXd e = data.y() - a->x * a->theta_hat;
  a->s_sq = a->sigma_quadform(e);
  a->y_sinv_y = a->sigma_quadform(data.y());
  return a;
}

}  // namespace

AssemblyPtr assemble(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  if (xi.size() != data.r())
    throw InputError("assemble: range vector length does not match factor count");
  for (long k = 0; k < xi.size(); ++k)
    if (!(xi(k) > 0.0)) throw InputError("assemble: ranges must be positive");
  if (use_structured(data, path)) return assemble_structured(data, xi);
  return assemble_dense(data, xi);
}

GlsAuxiliaries gls_auxiliaries(const GpDataset& data, const Eigen::VectorXd& xi, Path path) {
  AssemblyPtr a = assemble(data, xi, path);
  GlsAuxiliaries out;
  out.theta_hat = a->theta_hat;
  out.s_sq = a->s_sq;
  out.logdet_sigma = a->logdet_sigma;
  out.logdet_xtsx = a->logdet_xtsx;
  out.q_apply = [a](const Eigen::VectorXd& v) { return a->apply_q(v); };
  out.assembly = a;
  return out;
}

double log_likelihood(const Assembly& a, const GpDataset& data,
                      const Eigen::VectorXd& theta, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw InputError("log_likelihood: sigma_sq must be positive");
  const Eigen::VectorXd e = a.residual(data, theta);
  const double quad = a.sigma_quadform(e);
  const double n = static_cast<double>(a.n);
  return -0.5 * n * (kLog2Pi + std::log(sigma_sq)) - 0.5 * a.logdet_sigma -
         0.5 * quad / sigma_sq;
}

double log_likelihood(const GpDataset& data, const Eigen::VectorXd& theta,
                      double sigma_sq, const Eigen::VectorXd& xi, Path path) {
  return log_likelihood(*assemble(data, xi, path), data, theta, sigma_sq);
}

double log_integrated_theta(const Assembly& a, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw InputError("log_integrated_theta: sigma_sq must be positive");
  if (a.n <= a.q) throw InputError("log_integrated_theta: requires n > q");
  const double nmq = static_cast<double>(a.n - a.q);
  return -0.5 * nmq * (kLog2Pi + std::log(sigma_sq)) - 0.5 * a.logdet_sigma -
         0.5 * a.logdet_xtsx - 0.5 * a.s_sq / sigma_sq;
}

double log_integrated_theta(const GpDataset& data, double sigma_sq,
                            const Eigen::VectorXd& xi, Path path) {
  return log_integrated_theta(*assemble(data, xi, path), sigma_sq);
}

double log_integrated_theta_sigma(const Assembly& a, double a_exponent) {
  if (a.n <= a.q) throw InputError("log_integrated_theta_sigma: requires n > q");
  const double nmq = static_cast<double>(a.n - a.q);
  const double c = 0.5 * nmq + a_exponent - 1.0;
  if (!(c > 0.0))
    throw InputError("log_integrated_theta_sigma: requires a > 1 - (n - q)/2");
  if (!(a.s_sq > 1e-12 * std::max(a.y_sinv_y, 1e-300)))
    throw NumericalError("log_integrated_theta_sigma: S^2 = 0, response lies in the "
                         "column space of the design (degenerate data)");
  return -0.5 * nmq * kLog2Pi - 0.5 * a.logdet_sigma - 0.5 * a.logdet_xtsx +
         std::lgamma(c) + c * std::log(2.0) - c * std::log(a.s_sq);
}

double log_integrated_theta_sigma(const GpDataset& data, const Eigen::VectorXd& xi,
                                  double a, Path path) {
  return log_integrated_theta_sigma(*assemble(data, xi, path), a);
}

}  // namespace gpsep::lik
