#include "gpsep/correlation.hpp"

#include <cmath>
#include <sstream>

#include "gpsep/common.hpp"
#include "gpsep/linalg.hpp"

namespace gpsep::corr {

namespace {
constexpr double kMaternOriginTol = 1e-10;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::spherical: return "spherical";
    case Family::power_exponential: return "power_exponential";
    case Family::rational_quadratic: return "rational_quadratic";
    case Family::matern: return "matern";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  if (name == "spherical") return Family::spherical;
  if (name == "power_exponential") return Family::power_exponential;
  if (name == "rational_quadratic") return Family::rational_quadratic;
  if (name == "matern") return Family::matern;
  throw InputError("unknown correlation family '" + name + "'");
}

CorrelationFamily::CorrelationFamily(Family tag, double roughness)
    : tag(tag), roughness(roughness) {
  switch (tag) {
    case Family::spherical:
      break;  // no roughness parameter
    case Family::power_exponential:
      if (!(roughness > 0.0 && roughness <= 2.0))
        throw InputError("power_exponential roughness must lie in (0, 2]");
      break;
    case Family::rational_quadratic:
    case Family::matern:
      if (!(roughness > 0.0))
        throw InputError(family_name(tag) + " roughness must be positive");
      break;
  }
}

double corr(const CorrelationFamily& family, double d, double xi) {
  if (!(d >= 0.0)) throw InputError("corr: distance must be nonnegative");
  if (!(xi > 0.0)) throw InputError("corr: range must be positive");
  if (d == 0.0) return 1.0;
  const double u = d * xi;
  switch (family.tag) {
    case Family::spherical:
      if (u >= 1.0) return 0.0;
      return 1.0 - 1.5 * u + 0.5 * u * u * u;
    case Family::power_exponential:
      return std::exp(-std::pow(u, family.roughness));
    case Family::rational_quadratic:
      return std::pow(1.0 + u * u, -family.roughness);
    case Family::matern: {
      if (u < kMaternOriginTol) return 1.0;  // removable singularity
      if (u > 600.0) return 0.0;  // K_a underflows (and libstdc++ refuses) out here
      const double a = family.roughness;
      const double val = std::pow(u, a) * std::cyl_bessel_k(a, u) /
                         (std::pow(2.0, a - 1.0) * std::tgamma(a));
      return std::min(1.0, std::max(0.0, val));
    }
  }
  return 0.0;
}

double corr_deriv(const CorrelationFamily& family, double d, double xi) {
  if (!(d >= 0.0)) throw InputError("corr_deriv: distance must be nonnegative");
  if (!(xi > 0.0)) throw InputError("corr_deriv: range must be positive");
  if (d == 0.0) return 0.0;
  const double u = d * xi;
  switch (family.tag) {
    case Family::spherical:
      if (u == 1.0)
        warn("corr_deriv", "spherical derivative evaluated at the support edge d*xi = 1; "
                           "returning the left-derivative");
      if (u > 1.0) return 0.0;
      return -1.5 * d * (1.0 - u * u);
    case Family::power_exponential: {
      const double a = family.roughness;
      return -a * std::pow(d, a) * std::pow(xi, a - 1.0) * std::exp(-std::pow(u, a));
    }
    case Family::rational_quadratic: {
      const double a = family.roughness;
      return -2.0 * a * d * d * xi * std::pow(1.0 + u * u, -a - 1.0);
    }
    case Family::matern: {
      if (u > 600.0) return 0.0;
      const double a = family.roughness;
      const double uu = std::max(u, 1e-12);
      // d/du [u^a K_a(u)] = -u^a K_{a-1}(u); K is symmetric in its order
      return -d * std::pow(uu, a) * std::cyl_bessel_k(std::abs(a - 1.0), uu) /
             (std::pow(2.0, a - 1.0) * std::tgamma(a));
    }
  }
  return 0.0;
}

FactorModel::FactorModel(CorrelationFamily family, Eigen::MatrixXd locations_in,
                         double range)
    : family(family), locations(std::move(locations_in)), range(range) {
  if (locations.rows() < 2)
    throw InputError("FactorModel: each factor needs at least 2 locations");
  if (!(range > 0.0)) throw InputError("FactorModel: range must be positive");
  for (long i = 0; i < locations.rows(); ++i)
    for (long j = i + 1; j < locations.rows(); ++j)
      if ((locations.row(i) - locations.row(j)).norm() == 0.0) {
        std::ostringstream msg;
        msg << "FactorModel: locations " << i << " and " << j << " coincide";
        throw InputError(msg.str());
      }
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& locations) {
  const long n = locations.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      const double dist = (locations.row(i) - locations.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  return d;
}

Eigen::MatrixXd build_factor(const FactorModel& fm) {
  const Eigen::MatrixXd d = distance_matrix(fm.locations);
  const long n = d.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      const double rho = corr(fm.family, d(i, j), fm.range);
      s(i, j) = rho;
      s(j, i) = rho;
    }
  return s;
}

Eigen::MatrixXd build_factor_deriv(const FactorModel& fm) {
  const Eigen::MatrixXd d = distance_matrix(fm.locations);
  const long n = d.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      const double drho = corr_deriv(fm.family, d(i, j), fm.range);
      s(i, j) = drho;
      s(j, i) = drho;
    }
  return s;
}

ExpansionFactors expansion_leading(const FactorModel& fm, const Eigen::VectorXd* x_k) {
  if (fm.family.tag != Family::power_exponential)
    throw InputError("expansion_leading: only the power_exponential family is supported");
  const double alpha = fm.family.roughness;
  if (alpha >= 2.0)
    throw InputError("expansion_leading: alpha = 2 makes the leading matrix singular "
                     "on equally spaced designs of more than three points");

  const long n = fm.locations.rows();
  const Eigen::MatrixXd dist = distance_matrix(fm.locations);
  ExpansionFactors ex;
  ex.nu_exponent = alpha;
  ex.d = -dist.array().pow(alpha).matrix();

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ex.d);
  const Eigen::MatrixXd dinv = lu.inverse();
  {
    // a cheap singularity check: D D^{-1} should reproduce the identity
    const double resid = (ex.d * dinv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-6)
      throw NumericalError("expansion_leading: leading matrix D is numerically singular");
  }

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd dinv_one = dinv * ones;
  const double one_dinv_one = ones.dot(dinv_one);
  if (std::abs(one_dinv_one) < 1e-12)
    throw NumericalError("expansion_leading: 1'D^{-1}1 = 0, expansion undefined");

  ex.f = (dinv_one * dinv_one.transpose()) / (one_dinv_one * one_dinv_one);
  ex.g = dinv - (dinv_one * dinv_one.transpose()) / one_dinv_one;

  if (x_k != nullptr) {
    const Eigen::VectorXd& x = *x_k;
    if (x.size() != n) throw InputError("expansion_leading: regressor length mismatch");
    const bool is_ones = (x - ones).cwiseAbs().maxCoeff() == 0.0;
    if (!is_ones) {
      const Eigen::VectorXd gx = ex.g * x;
      const double xgx = x.dot(gx);
      if (std::abs(xgx) < 1e-12)
        throw NumericalError("expansion_leading: X'GX = 0, H undefined");
      ex.h = (gx * gx.transpose()) / xgx;
    }
  }
  return ex;
}

}  // namespace gpsep::corr
