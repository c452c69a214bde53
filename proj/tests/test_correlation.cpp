#include <doctest.h>

#include <cmath>

#include "gpsep/common.hpp"
#include "gpsep/correlation.hpp"
#include "gpsep/linalg.hpp"
#include "oracles.hpp"

using namespace gpsep;
using corr::CorrelationFamily;
using corr::Family;
using corr::FactorModel;

namespace {

const std::vector<CorrelationFamily> kAllFamilies = {
    {Family::spherical},
    {Family::power_exponential, 1.5},
    {Family::rational_quadratic, 1.0},
    {Family::matern, 1.5},
};

}  // namespace

TEST_CASE("roughness domains are validated at construction") {
  CHECK_THROWS_AS(CorrelationFamily(Family::power_exponential, 0.0), InputError);
  CHECK_THROWS_AS(CorrelationFamily(Family::power_exponential, 2.5), InputError);
  CHECK_NOTHROW(CorrelationFamily(Family::power_exponential, 2.0));
  CHECK_THROWS_AS(CorrelationFamily(Family::rational_quadratic, -1.0), InputError);
  CHECK_THROWS_AS(CorrelationFamily(Family::matern, 0.0), InputError);
  CHECK_NOTHROW(CorrelationFamily(Family::spherical));
}

TEST_CASE("corr at distance zero is exactly one") {
  for (const auto& fam : kAllFamilies)
    for (double xi : {1e-3, 1.0, 1e3}) CHECK(corr::corr(fam, 0.0, xi) == 1.0);
}

TEST_CASE("corr closed-form spot values") {
  CHECK(corr::corr({Family::power_exponential, 2.0}, 1.0, 1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(corr::corr({Family::rational_quadratic, 1.0}, 1.0, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // spherical at u = 0.5: 1 - 0.75 + 0.0625
  CHECK(corr::corr({Family::spherical}, 0.5, 1.0) ==
        doctest::Approx(1.0 - 0.75 + 0.0625).epsilon(1e-14));
}

TEST_CASE("Matern with roughness 1/2 is the exponential correlation") {
  const CorrelationFamily fam{Family::matern, 0.5};
  for (double d : {0.5, 1.0, 2.0}) {
    const double got = corr::corr(fam, d, 1.3);
    CHECK(got == doctest::Approx(std::exp(-d * 1.3)).epsilon(1e-10));
  }
}

TEST_CASE("Matern evaluation matches Bessel quadrature") {
  for (double alpha : {0.7, 1.5, 2.5}) {
    const CorrelationFamily fam{Family::matern, alpha};
    for (double u : {0.3, 1.0, 2.7}) {
      const double expected = std::pow(u, alpha) * oracles::bessel_k_quadrature(alpha, u) /
                              (std::pow(2.0, alpha - 1.0) * std::tgamma(alpha));
      CHECK(corr::corr(fam, u, 1.0) == doctest::Approx(expected).epsilon(1e-7));
    }
  }
}

TEST_CASE("corr is nonincreasing in distance") {
  for (const auto& fam : kAllFamilies) {
    for (double xi : {0.5, 2.0}) {
      double prev = 1.0;
      for (int i = 1; i <= 60; ++i) {
        const double rho = corr::corr(fam, 0.1 * i, xi);
        CHECK(rho <= prev + 1e-12);
        CHECK(rho >= 0.0);
        CHECK(rho <= 1.0);
        prev = rho;
      }
    }
  }
}

TEST_CASE("spherical support ends exactly at d*xi = 1") {
  CHECK(corr::corr({Family::spherical}, 1.0, 1.0) == 0.0);
  CHECK(corr::corr({Family::spherical}, 2.0, 1.0) == 0.0);
  CHECK(corr::corr({Family::spherical}, 0.999, 1.0) > 0.0);
}

TEST_CASE("corr_deriv at distance zero is zero") {
  for (const auto& fam : kAllFamilies) CHECK(corr::corr_deriv(fam, 0.0, 1.7) == 0.0);
}

TEST_CASE("corr_deriv closed form for the exponential case") {
  // d/dxi exp(-xi) at xi = 1
  CHECK(corr::corr_deriv({Family::power_exponential, 1.0}, 1.0, 1.0) ==
        doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("corr_deriv matches central finite differences") {
  Rng rng(7);
  for (const auto& fam : kAllFamilies) {
    for (int trial = 0; trial < 20; ++trial) {
      const double d = 0.05 + 2.0 * rng.uniform();
      const double xi = 0.1 + 2.0 * rng.uniform();
      if (fam.tag == Family::spherical && std::abs(d * xi - 1.0) < 0.05) continue;
      const double h = 1e-6 * xi;
      const double fd = oracles::central_diff(
          [&](double x) { return corr::corr(fam, d, x); }, xi, h);
      const double got = corr::corr_deriv(fam, d, xi);
      if (std::abs(fd) > 1e-12)
        CHECK(got == doctest::Approx(fd).epsilon(1e-5));
      else
        CHECK(std::abs(got - fd) < 1e-8);
    }
  }
}

TEST_CASE("spherical derivative at the kink warns and returns the left value") {
  drain_warnings();
  const double got = corr::corr_deriv({Family::spherical}, 1.0, 1.0);
  CHECK(got == doctest::Approx(-1.5 * (1.0 - 1.0)));
  CHECK(warning_count() == 1);
  drain_warnings();
}

TEST_CASE("FactorModel validates its invariants") {
  Eigen::MatrixXd loc1(1, 1);
  loc1 << 0.0;
  CHECK_THROWS_AS(FactorModel({Family::spherical}, loc1, 1.0), InputError);
  Eigen::MatrixXd dup(2, 1);
  dup << 0.3, 0.3;
  CHECK_THROWS_AS(FactorModel({Family::spherical}, dup, 1.0), InputError);
  Eigen::MatrixXd ok(2, 1);
  ok << 0.0, 1.0;
  CHECK_THROWS_AS(FactorModel({Family::spherical}, ok, -1.0), InputError);
}

TEST_CASE("build_factor on a single pair") {
  Eigen::MatrixXd loc(2, 1);
  loc << 0.0, 0.7;
  const FactorModel fm{{Family::power_exponential, 1.5}, loc, 2.0};
  const Eigen::MatrixXd s = corr::build_factor(fm);
  const double rho = corr::corr(fm.family, 0.7, 2.0);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(1, 1) == 1.0);
  CHECK(s(0, 1) == doctest::Approx(rho));
  CHECK(s(1, 0) == doctest::Approx(rho));
}

TEST_CASE("build_factor at huge range is numerically the identity") {
  const FactorModel fm{{Family::power_exponential, 1.5},
                       linspace_locations(0.0, 1.0, 4), 1e6};
  const Eigen::MatrixXd s = corr::build_factor(fm);
  CHECK((s - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("build_factor equals elementwise corr evaluation") {
  const FactorModel fm{{Family::power_exponential, 1.5},
                       linspace_locations(0.0, 1.0, 5), 2.0};
  const Eigen::MatrixXd s = corr::build_factor(fm);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double d = std::abs(i - j) * 0.25;
      CHECK(s(i, j) == doctest::Approx(corr::corr(fm.family, d, 2.0)).epsilon(1e-14));
    }
}

TEST_CASE("build_factor_deriv: zero diagonal, elementwise and Frobenius FD agreement") {
  for (const auto& fam : kAllFamilies) {
    const FactorModel fm{fam, linspace_locations(0.0, 1.0, 5), 1.7};
    const Eigen::MatrixXd ds = corr::build_factor_deriv(fm);
    for (int i = 0; i < 5; ++i) CHECK(ds(i, i) == 0.0);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        if (i == j) continue;
        const double d = std::abs(i - j) * 0.25;
        CHECK(ds(i, j) == doctest::Approx(corr::corr_deriv(fam, d, 1.7)).epsilon(1e-12));
      }
    const double h = 1e-6 * fm.range;
    const Eigen::MatrixXd fd =
        (corr::build_factor({fam, fm.locations, fm.range + h}) -
         corr::build_factor({fam, fm.locations, fm.range - h})) /
        (2.0 * h);
    CHECK((ds - fd).norm() / std::max(1e-12, fd.norm()) < 1e-5);
  }
}

TEST_CASE("separable product correlation stays positive definite") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t k = 0; k < kAllFamilies.size(); ++k) {
      Eigen::MatrixXd loc(3, 1);
      loc << rng.uniform(), 1.0 + rng.uniform(), 2.0 + rng.uniform();
      factors.push_back(
          corr::build_factor({kAllFamilies[k], loc, 0.2 + 2.0 * rng.uniform()}));
    }
    CHECK_NOTHROW((void)kron::FactorCholesky{factors});  // Cholesky success = PD
  }
}

TEST_CASE("expansion_leading: two points at distance one") {
  Eigen::MatrixXd loc(2, 1);
  loc << 0.0, 1.0;
  const FactorModel fm{{Family::power_exponential, 1.0}, loc, 0.5};
  const auto ex = corr::expansion_leading(fm);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.0, -1.0, -1.0, 0.0;
  CHECK((ex.d - expected).norm() < 1e-14);
  CHECK(ex.nu_exponent == doctest::Approx(1.0));
}

TEST_CASE("expansion_leading leading matrix fits (Sigma - 11')/nu as xi -> 0") {
  const FactorModel fm{{Family::power_exponential, 1.0},
                       linspace_locations(0.0, 1.0, 3), 1e-4};
  const auto ex = corr::expansion_leading(fm);
  const Eigen::MatrixXd sigma = corr::build_factor(fm);
  const double nu = std::pow(fm.range, ex.nu_exponent);
  const Eigen::MatrixXd fitted =
      (sigma - Eigen::MatrixXd::Ones(3, 3)) / nu;
  CHECK((fitted - ex.d).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("expansion identities: DG idempotent with trace n-1; tr DH = 1") {
  Rng rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 3 + static_cast<int>(trial % 3);
    Eigen::MatrixXd loc(n, 1);
    for (int i = 0; i < n; ++i) loc(i, 0) = i + 0.3 * rng.uniform();
    const FactorModel fm{{Family::power_exponential, 1.4}, loc, 0.01};

    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = loc(i, 0);
    const auto ex = corr::expansion_leading(fm, &x);

    const Eigen::MatrixXd dg = ex.d * ex.g;
    CHECK((dg * dg - dg).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(dg.trace() == doctest::Approx(static_cast<double>(n - 1)).epsilon(1e-8));
    CHECK((ex.d * ex.h).trace() == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("small-range inverse limit: nu * Sigma^{-1} approaches G") {
  const FactorModel fm{{Family::power_exponential, 1.5},
                       linspace_locations(0.0, 1.0, 4), 1e-3};
  const auto ex = corr::expansion_leading(fm);
  const Eigen::MatrixXd sigma = corr::build_factor(fm);
  const double nu = std::pow(fm.range, ex.nu_exponent);
  const Eigen::MatrixXd scaled_inv = nu * sigma.inverse();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::abs(ex.g(i, j)) > 0.05)
        CHECK(scaled_inv(i, j) == doctest::Approx(ex.g(i, j)).epsilon(0.05));
}

TEST_CASE("expansion_leading rejects unsupported cases") {
  const FactorModel quad{{Family::power_exponential, 2.0},
                         linspace_locations(0.0, 1.0, 5), 1.0};
  CHECK_THROWS_AS(corr::expansion_leading(quad), InputError);
  const FactorModel matern{{Family::matern, 1.0}, linspace_locations(0.0, 1.0, 3), 1.0};
  CHECK_THROWS_AS(corr::expansion_leading(matern), InputError);
}
