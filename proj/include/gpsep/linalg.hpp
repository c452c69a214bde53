#ifndef GPSEP_LINALG_HPP
#define GPSEP_LINALG_HPP

#include <Eigen/Dense>
#include <string_view>
#include <vector>

namespace gpsep::kron {

// Jittered Cholesky: on failure, retry with the diagonal scaled by (1+jitter)
// for jitter = 1e-12, 1e-11, ..., 1e-8, emitting a warning record per retry.
// Throws NumericalError once 1e-8 is exhausted. Near-singular factors are
// expected at very small range parameters, so this is a normal code path.
struct CholResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // 0 when no jitter was needed
};
CholResult jittered_cholesky(const Eigen::MatrixXd& a, std::string_view label);

// Ordered list of square symmetric factors of Sigma = Sigma_1 (x) ... (x) Sigma_r.
// Vectors of length prod(n_k) use lexicographic order with the LAST factor
// varying fastest, matching (A (x) B) vec semantics.
class KroneckerFactors {
 public:
  explicit KroneckerFactors(std::vector<Eigen::MatrixXd> factors);

  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
  const Eigen::MatrixXd& factor(int k) const { return factors_[static_cast<std::size_t>(k)]; }
  int count() const { return static_cast<int>(factors_.size()); }
  long total_dim() const { return total_dim_; }
  std::vector<int> dims() const;

 private:
  std::vector<Eigen::MatrixXd> factors_;
  long total_dim_;
};

// Per-factor lower Cholesky triangles; L_k L_k' = Sigma_k (after any jitter).
class FactorCholesky {
 public:
  explicit FactorCholesky(const KroneckerFactors& kf);
  // same, from factor matrices already known to be symmetric
  explicit FactorCholesky(const std::vector<Eigen::MatrixXd>& sigmas);

  const Eigen::MatrixXd& lower(int k) const { return lowers_[static_cast<std::size_t>(k)]; }
  int count() const { return static_cast<int>(lowers_.size()); }
  double log_det() const { return log_det_; }  // log|(x) Sigma_k|

  // (x)Sigma_k^{-1} rhs without materializing the big matrix
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  // rhs' ((x)Sigma_k)^{-1} rhs  (squared norm of the forward-solve image)
  double quadratic_form(const Eigen::VectorXd& rhs) const;
  // ((x)L_k) z, used to draw correlated Gaussians
  Eigen::VectorXd apply_lower(const Eigen::VectorXd& z) const;

 private:
  std::vector<Eigen::MatrixXd> lowers_;
  std::vector<int> dims_;
  long total_dim_;
  double log_det_;
};

// In-place (I (x) ... (x) M (x) ... (x) I) x with M in slot k of dims.
void apply_mode(const Eigen::MatrixXd& m, int k, const std::vector<int>& dims,
                Eigen::VectorXd& x);

// ((x) M_k) x via successive mode applications (Fact-1 style factor-wise product)
Eigen::VectorXd kron_apply(const std::vector<Eigen::MatrixXd>& mats,
                           const std::vector<int>& dims, Eigen::VectorXd x);

// Explicit expansion; a test oracle, refuses above the cap.
Eigen::MatrixXd kron_expand(const KroneckerFactors& kf, long cap = 4096);

double kron_logdet(const KroneckerFactors& kf);
Eigen::VectorXd kron_solve(const KroneckerFactors& kf, const Eigen::VectorXd& rhs);
double kron_quadratic_form(const KroneckerFactors& kf, const Eigen::VectorXd& x);
double kron_trace(const KroneckerFactors& kf);

// (A + 11')^{-1} = A^{-1} - A^{-1}11'A^{-1} / (1 + 1'A^{-1}1); errors when
// 1'A^{-1}1 = -1 (the update is singular there).
Eigen::MatrixXd rank_one_update_inverse(const Eigen::MatrixXd& a);

}  // namespace gpsep::kron

#endif
