#ifndef GPSEP_CORRELATION_HPP
#define GPSEP_CORRELATION_HPP

#include <Eigen/Dense>
#include <string>

namespace gpsep::corr {

enum class Family { spherical, power_exponential, rational_quadratic, matern };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Isotropic correlation family with a fixed roughness parameter. Roughness is
// validated at construction: power-exponential needs alpha in (0,2], rational
// quadratic and Matern need alpha > 0, spherical ignores it.
struct CorrelationFamily {
  Family tag;
  double roughness;

  CorrelationFamily(Family tag, double roughness = 1.0);
};

// rho(d; xi), a correlation in [0,1] with rho(0; xi) = 1 exactly.
double corr(const CorrelationFamily& family, double d, double xi);

// d rho / d xi, analytic. The spherical family has a second-derivative kink at
// d*xi = 1; exactly on it we return the left-derivative and emit a warning.
double corr_deriv(const CorrelationFamily& family, double d, double xi);

// One separable dimension: a family, its observation sites and a range value.
struct FactorModel {
  CorrelationFamily family;
  Eigen::MatrixXd locations;  // n_k x p_k, rows pairwise distinct, n_k >= 2
  double range;               // xi_k > 0

  FactorModel(CorrelationFamily family, Eigen::MatrixXd locations, double range);
  int size() const { return static_cast<int>(locations.rows()); }
};

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& locations);

Eigen::MatrixXd build_factor(const FactorModel& fm);        // Sigma_k
Eigen::MatrixXd build_factor_deriv(const FactorModel& fm);  // dSigma_k/dxi_k

// Leading small-range behavior Sigma_k = 11' + nu(xi) (D + o(1)) with
// nu(xi) = xi^alpha, available for the power-exponential family with
// alpha < 2 (D is singular at alpha = 2 on larger equally spaced designs).
// F, G, H are the limit matrices entering the small-range analysis of the
// inverse and of the GLS projector.
struct ExpansionFactors {
  double nu_exponent;  // nu(xi) = xi^nu_exponent
  Eigen::MatrixXd d;
  Eigen::MatrixXd f;
  Eigen::MatrixXd g;
  Eigen::MatrixXd h;  // empty when the regressor column is constant
};

ExpansionFactors expansion_leading(const FactorModel& fm,
                                   const Eigen::VectorXd* x_k = nullptr);

}  // namespace gpsep::corr

#endif
