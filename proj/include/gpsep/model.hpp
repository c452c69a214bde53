#ifndef GPSEP_MODEL_HPP
#define GPSEP_MODEL_HPP

#include <Eigen/Dense>
#include <vector>

#include "gpsep/correlation.hpp"

namespace gpsep {

// Observation sites. Either a Cartesian product of per-factor location lists
// (the structured case) or an explicit n x p table with a per-factor split of
// the coordinate columns (the dense fallback).
class DesignGrid {
 public:
  static DesignGrid cartesian(std::vector<Eigen::MatrixXd> factor_locations);
  static DesignGrid dense(Eigen::MatrixXd locations, std::vector<int> factor_dims);

  bool is_cartesian() const { return !factor_locations_.empty(); }
  int factor_count() const;
  const std::vector<Eigen::MatrixXd>& factor_locations() const { return factor_locations_; }
  const Eigen::MatrixXd& dense_locations() const { return dense_locations_; }
  const std::vector<int>& factor_dims() const { return factor_dims_; }
  std::vector<int> factor_sizes() const;  // n_k (cartesian only)
  long total_points() const;

  // Cartesian -> explicit table in lexicographic order, last factor fastest.
  Eigen::MatrixXd materialize_locations() const;

 private:
  DesignGrid() = default;
  std::vector<Eigen::MatrixXd> factor_locations_;  // k -> n_k x p_k
  Eigen::MatrixXd dense_locations_;                // n x p
  std::vector<int> factor_dims_;                   // p_k
};

// Equally spaced points on [lo, hi] as an n x 1 location matrix.
Eigen::MatrixXd linspace_locations(double lo, double hi, int n);

// One modeled dataset: response, mean design, sites and the per-factor
// correlation families. The mean design is either a list of per-factor
// columns X_k (their Kronecker product is the single regressor, q = 1) or an
// explicit n x q matrix. The structured computational path requires a
// Cartesian grid together with a factored mean design.
class GpDataset {
 public:
  GpDataset(Eigen::VectorXd y, DesignGrid grid,
            std::vector<corr::CorrelationFamily> families,
            std::vector<Eigen::VectorXd> x_factors);
  GpDataset(Eigen::VectorXd y, DesignGrid grid,
            std::vector<corr::CorrelationFamily> families, Eigen::MatrixXd x_dense);

  const Eigen::VectorXd& y() const { return y_; }
  const DesignGrid& grid() const { return grid_; }
  const std::vector<corr::CorrelationFamily>& families() const { return families_; }
  const std::vector<Eigen::VectorXd>& x_factors() const { return x_factors_; }

  long n() const { return y_.size(); }
  int q() const { return q_; }
  int r() const { return static_cast<int>(families_.size()); }

  bool has_kron_mean() const { return !x_factors_.empty(); }
  bool structured() const { return grid_.is_cartesian() && has_kron_mean(); }

  // The regression design as an explicit matrix (materializes (x)X_k at need).
  Eigen::MatrixXd design_matrix() const;

  // Per-factor correlation matrices / range derivatives at xi (cartesian grids).
  std::vector<Eigen::MatrixXd> factor_sigmas(const Eigen::VectorXd& xi) const;
  std::vector<Eigen::MatrixXd> factor_sigma_derivs(const Eigen::VectorXd& xi) const;

  // Full n x n correlation matrix at xi from explicit locations (dense path),
  // and its derivative with respect to xi_k.
  Eigen::MatrixXd dense_sigma(const Eigen::VectorXd& xi) const;
  Eigen::MatrixXd dense_sigma_deriv(const Eigen::VectorXd& xi, int k) const;

 private:
  void validate() const;

  Eigen::VectorXd y_;
  DesignGrid grid_;
  std::vector<corr::CorrelationFamily> families_;
  std::vector<Eigen::VectorXd> x_factors_;
  Eigen::MatrixXd x_dense_;
  int q_;
};

// Computation path selector; `automatic` picks the structured route whenever
// the dataset supports it, `dense` forces explicit n x n algebra.
enum class Path { automatic, dense };

inline bool use_structured(const GpDataset& data, Path path) {
  return path == Path::automatic && data.structured();
}

}  // namespace gpsep

#endif
