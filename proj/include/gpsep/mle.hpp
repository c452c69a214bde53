#ifndef GPSEP_MLE_HPP
#define GPSEP_MLE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gpsep/likelihood.hpp"
#include "gpsep/model.hpp"

namespace gpsep::mle {

// Expected information of the mean-integrated likelihood over (sigma_sq, xi):
//   (1/2) [ (n-q)/sigma^4        tr W_k / sigma^2 ;
//           tr W_k / sigma^2     tr W_i W_j       ]
struct FisherInfo {
  Eigen::MatrixXd matrix;  // (r+1) x (r+1), ordered (sigma_sq, xi_1, ..., xi_r)
  int r() const { return static_cast<int>(matrix.rows()) - 1; }
  Eigen::MatrixXd xi_block() const { return matrix.bottomRightCorner(r(), r()); }
};

struct ScoringControls {
  int max_iterations = 200;
  double grad_tol = 1e-8;     // sup-norm of the xi-gradient
  int max_halvings = 20;      // step-size backtracking
  bool multistart = true;     // default start plus 0.1x and 10x
  Path path = Path::automatic;
};

struct IterationRecord {
  double sigma_sq;
  Eigen::VectorXd xi;
  double grad_norm;
  double log_lik;
  double step_scale;  // lambda actually applied
  int clamped;        // coordinates pulled back into the parameter space
};

struct MleResult {
  double sigma_sq_hat = 0.0;
  Eigen::VectorXd xi_hat;
  FisherInfo info;
  int iterations = 0;
  bool converged = false;
  double log_lik = 0.0;  // integrated log likelihood at the solution
  std::vector<IterationRecord> trace;
};

// Analytic gradient of the mean-integrated log likelihood at (sigma_sq, xi):
//   d/dsigma_sq = ( y'Qy / sigma^4 - (n-q)/sigma^2 ) / 2
//   d/dxi_k     = ( y'Q W_k y / sigma^2 - tr W_k ) / 2
Eigen::VectorXd integrated_score(const GpDataset& data, double sigma_sq,
                                 const Eigen::VectorXd& xi, Path path = Path::automatic);

FisherInfo expected_information(const GpDataset& data, double sigma_sq,
                                const Eigen::VectorXd& xi, Path path = Path::automatic);

// Scale-aware deterministic start: 1 / median pairwise distance per factor.
Eigen::VectorXd default_init_xi(const GpDataset& data);

// Fisher scoring with the closed-form variance update, per-coordinate
// clamping of steps that leave the parameter space, and step halving until
// the objective does not decrease. Non-convergence is reported, not thrown.
MleResult fisher_scoring(const GpDataset& data,
                         std::optional<Eigen::VectorXd> init_xi = std::nullopt,
                         const ScoringControls& controls = {});

}  // namespace gpsep::mle

#endif
