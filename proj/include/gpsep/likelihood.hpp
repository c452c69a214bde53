#ifndef GPSEP_LIKELIHOOD_HPP
#define GPSEP_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gpsep/linalg.hpp"
#include "gpsep/model.hpp"

namespace gpsep::lik {

// Everything that depends on the range vector alone, factorized once and then
// shared by likelihood, prior and sampler evaluations at the same xi.
//
// Structured route (Cartesian grid, factored mean design): only per-factor
// n_k x n_k objects are formed. The projector applies as
//   Q v = Sigma^{-1} v - kx (kx'v) / prod(m_k),
// with kx the materialized Kronecker product of the Sigma_k^{-1} X_k.
// Dense route: explicit n x n algebra from the location table.
struct Assembly {
  bool structured = false;
  Eigen::VectorXd xi;

  // structured route
  std::vector<Eigen::MatrixXd> sigma;  // Sigma_k
  std::optional<kron::FactorCholesky> fchol;
  std::vector<Eigen::VectorXd> u;  // Sigma_k^{-1} X_k
  Eigen::VectorXd m;               // X_k' Sigma_k^{-1} X_k
  double m_prod = 1.0;
  Eigen::VectorXd kx;    // (x)_k u_k
  Eigen::VectorXd xcol;  // (x)_k X_k

  // dense route
  Eigen::MatrixXd sigma_dense;
  Eigen::MatrixXd lower;   // Cholesky factor of sigma_dense
  Eigen::MatrixXd x;       // n x q design
  Eigen::MatrixXd sinv_x;  // Sigma^{-1} X
  Eigen::MatrixXd xtsx;    // X' Sigma^{-1} X
  Eigen::MatrixXd xtsx_lower;

  // shared results
  double logdet_sigma = 0.0;
  double logdet_xtsx = 0.0;
  Eigen::VectorXd theta_hat;
  double s_sq = 0.0;       // residual form (y - X theta_hat)' Sigma^{-1} (y - X theta_hat)
  double y_sinv_y = 0.0;   // y' Sigma^{-1} y
  long n = 0;
  int q = 1;

  Eigen::VectorXd sigma_solve(const Eigen::VectorXd& v) const;
  double sigma_quadform(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_q(const Eigen::VectorXd& v) const;
  Eigen::VectorXd residual(const GpDataset& data, const Eigen::VectorXd& theta) const;
};

using AssemblyPtr = std::shared_ptr<const Assembly>;

AssemblyPtr assemble(const GpDataset& data, const Eigen::VectorXd& xi,
                     Path path = Path::automatic);

// GLS auxiliaries of the integrated likelihood: estimate, residual sum of
// squares S^2 = y'Qy, determinants and the projector as an operator.
struct GlsAuxiliaries {
  Eigen::VectorXd theta_hat;
  double s_sq;
  double logdet_sigma;
  double logdet_xtsx;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> q_apply;
  AssemblyPtr assembly;
};

GlsAuxiliaries gls_auxiliaries(const GpDataset& data, const Eigen::VectorXd& xi,
                               Path path = Path::automatic);

// Exact log density of N(X theta, sigma_sq * Sigma(xi)), constants included.
double log_likelihood(const GpDataset& data, const Eigen::VectorXd& theta,
                      double sigma_sq, const Eigen::VectorXd& xi,
                      Path path = Path::automatic);
double log_likelihood(const Assembly& a, const GpDataset& data,
                      const Eigen::VectorXd& theta, double sigma_sq);

// Mean-integrated likelihood: log of
//   (2 pi)^{-(n-q)/2} (sigma_sq)^{-(n-q)/2} |Sigma|^{-1/2} |X'S^{-1}X|^{-1/2}
//   exp(-S^2 / (2 sigma_sq)),
// the exact integral of the density over a flat mean coefficient.
double log_integrated_theta(const GpDataset& data, double sigma_sq,
                            const Eigen::VectorXd& xi, Path path = Path::automatic);
double log_integrated_theta(const Assembly& a, double sigma_sq);

// Fully integrated likelihood in xi under a (sigma_sq)^{-a} variance factor:
// log of
//   (2 pi)^{-(n-q)/2} |Sigma|^{-1/2} |X'S^{-1}X|^{-1/2}
//   Gamma(c) 2^c (S^2)^{-c},   c = (n-q)/2 + a - 1,
// which is exactly the sigma_sq-integral of the previous level times
// (sigma_sq)^{-a}. Requires c > 0 and S^2 > 0.
double log_integrated_theta_sigma(const GpDataset& data, const Eigen::VectorXd& xi,
                                  double a, Path path = Path::automatic);
double log_integrated_theta_sigma(const Assembly& a, double a_exponent);

}  // namespace gpsep::lik

#endif
