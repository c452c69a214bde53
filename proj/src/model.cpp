#include "gpsep/model.hpp"

#include <sstream>

#include "gpsep/common.hpp"

namespace gpsep {

DesignGrid DesignGrid::cartesian(std::vector<Eigen::MatrixXd> factor_locations) {
  if (factor_locations.empty())
    throw InputError("DesignGrid: at least one factor is required");
  DesignGrid g;
  for (std::size_t k = 0; k < factor_locations.size(); ++k) {
    const auto& f = factor_locations[k];
    if (f.rows() < 2) {
      std::ostringstream msg;
      msg << "DesignGrid: factor " << k << " has " << f.rows()
          << " locations; at least 2 are required";
      throw InputError(msg.str());
    }
    g.factor_dims_.push_back(static_cast<int>(f.cols()));
  }
  g.factor_locations_ = std::move(factor_locations);
  return g;
}

DesignGrid DesignGrid::dense(Eigen::MatrixXd locations, std::vector<int> factor_dims) {
  if (locations.rows() < 1) throw InputError("DesignGrid: dense design needs >= 1 point");
  long p = 0;
  for (int d : factor_dims) {
    if (d < 1) throw InputError("DesignGrid: factor dimensions must be positive");
    p += d;
  }
  if (p != locations.cols())
    throw InputError("DesignGrid: factor dimensions do not sum to the location width");
  DesignGrid g;
  g.dense_locations_ = std::move(locations);
  g.factor_dims_ = std::move(factor_dims);
  return g;
}

int DesignGrid::factor_count() const { return static_cast<int>(factor_dims_.size()); }

std::vector<int> DesignGrid::factor_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(factor_locations_.size());
  for (const auto& f : factor_locations_) sizes.push_back(static_cast<int>(f.rows()));
  return sizes;
}

long DesignGrid::total_points() const {
  if (is_cartesian()) {
    long n = 1;
    for (const auto& f : factor_locations_) n *= f.rows();
    return n;
  }
  return dense_locations_.rows();
}

Eigen::MatrixXd DesignGrid::materialize_locations() const {
  if (!is_cartesian()) return dense_locations_;
  const long n = total_points();
  long p = 0;
  for (int d : factor_dims_) p += d;
  Eigen::MatrixXd out(n, p);
  const auto sizes = factor_sizes();
  for (long row = 0; row < n; ++row) {
    long rem = row;
    long col = p;
    for (int k = factor_count() - 1; k >= 0; --k) {  // last factor fastest
      const long nk = sizes[static_cast<std::size_t>(k)];
      const long ik = rem % nk;
      rem /= nk;
      const int pk = factor_dims_[static_cast<std::size_t>(k)];
      col -= pk;
      out.block(row, col, 1, pk) = factor_locations_[static_cast<std::size_t>(k)].row(ik);
    }
  }
  return out;
}

Eigen::MatrixXd linspace_locations(double lo, double hi, int n) {
  if (n < 2) throw InputError("linspace_locations: need at least 2 points");
  Eigen::MatrixXd out(n, 1);
  for (int i = 0; i < n; ++i)
    out(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

GpDataset::GpDataset(Eigen::VectorXd y, DesignGrid grid,
                     std::vector<corr::CorrelationFamily> families,
                     std::vector<Eigen::VectorXd> x_factors)
    : y_(std::move(y)),
      grid_(std::move(grid)),
      families_(std::move(families)),
      x_factors_(std::move(x_factors)),
      q_(1) {
  if (!grid_.is_cartesian())
    throw InputError("GpDataset: a factored mean design requires a Cartesian grid");
  if (x_factors_.size() != static_cast<std::size_t>(grid_.factor_count()))
    throw InputError("GpDataset: one mean-design column per factor is required");
  const auto sizes = grid_.factor_sizes();
  for (std::size_t k = 0; k < x_factors_.size(); ++k)
    if (x_factors_[k].size() != sizes[k]) {
      std::ostringstream msg;
      msg << "GpDataset: mean-design column " << k << " has length "
          << x_factors_[k].size() << ", expected " << sizes[k];
      throw InputError(msg.str());
    }
  validate();
}

GpDataset::GpDataset(Eigen::VectorXd y, DesignGrid grid,
                     std::vector<corr::CorrelationFamily> families,
                     Eigen::MatrixXd x_dense)
    : y_(std::move(y)),
      grid_(std::move(grid)),
      families_(std::move(families)),
      x_dense_(std::move(x_dense)),
      q_(static_cast<int>(x_dense_.cols())) {
  if (x_dense_.rows() != grid_.total_points())
    throw InputError("GpDataset: design matrix rows do not match the design size");
  if (q_ < 1 || q_ > grid_.total_points())
    throw InputError("GpDataset: need 1 <= q <= n regression columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_dense_);
  if (qr.rank() < q_)
    throw InputError("GpDataset: design matrix is rank deficient");
  validate();
}

void GpDataset::validate() const {
  if (y_.size() != grid_.total_points())
    throw InputError("GpDataset: response length does not match the design size");
  if (families_.size() != static_cast<std::size_t>(grid_.factor_count()))
    throw InputError("GpDataset: one correlation family per factor is required");
  if (y_.size() < q_)
    throw InputError("GpDataset: need n >= q observations");
}

Eigen::MatrixXd GpDataset::design_matrix() const {
  if (!has_kron_mean()) return x_dense_;
  Eigen::VectorXd x = x_factors_[0];
  for (std::size_t k = 1; k < x_factors_.size(); ++k) {
    const Eigen::VectorXd& b = x_factors_[k];
    Eigen::VectorXd next(x.size() * b.size());
    for (long i = 0; i < x.size(); ++i)
      next.segment(i * b.size(), b.size()) = x(i) * b;
    x = std::move(next);
  }
  return x;
}

std::vector<Eigen::MatrixXd> GpDataset::factor_sigmas(const Eigen::VectorXd& xi) const {
  if (!grid_.is_cartesian())
    throw InputError("factor_sigmas: dataset has no Cartesian grid");
  if (xi.size() != r()) throw InputError("factor_sigmas: range vector length mismatch");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(families_.size());
  for (std::size_t k = 0; k < families_.size(); ++k)
    out.push_back(corr::build_factor(
        {families_[k], grid_.factor_locations()[k], xi(static_cast<long>(k))}));
  return out;
}

std::vector<Eigen::MatrixXd> GpDataset::factor_sigma_derivs(const Eigen::VectorXd& xi) const {
  if (!grid_.is_cartesian())
    throw InputError("factor_sigma_derivs: dataset has no Cartesian grid");
  if (xi.size() != r()) throw InputError("factor_sigma_derivs: range vector length mismatch");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(families_.size());
  for (std::size_t k = 0; k < families_.size(); ++k)
    out.push_back(corr::build_factor_deriv(
        {families_[k], grid_.factor_locations()[k], xi(static_cast<long>(k))}));
  return out;
}

Eigen::MatrixXd GpDataset::dense_sigma(const Eigen::VectorXd& xi) const {
  if (xi.size() != r()) throw InputError("dense_sigma: range vector length mismatch");
  const Eigen::MatrixXd loc = grid_.materialize_locations();
  const long n = loc.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      double rho = 1.0;
      long col = 0;
      for (int k = 0; k < r(); ++k) {
        const int pk = grid_.factor_dims()[static_cast<std::size_t>(k)];
        const double d = (loc.block(i, col, 1, pk) - loc.block(j, col, 1, pk)).norm();
        rho *= corr::corr(families_[static_cast<std::size_t>(k)], d, xi(k));
        col += pk;
      }
      s(i, j) = rho;
      s(j, i) = rho;
    }
  return s;
}

Eigen::MatrixXd GpDataset::dense_sigma_deriv(const Eigen::VectorXd& xi, int k) const {
  if (xi.size() != r()) throw InputError("dense_sigma_deriv: range vector length mismatch");
  if (k < 0 || k >= r()) throw InputError("dense_sigma_deriv: factor index out of range");
  const Eigen::MatrixXd loc = grid_.materialize_locations();
  const long n = loc.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      double value = 1.0;
      long col = 0;
      for (int l = 0; l < r(); ++l) {
        const int pl = grid_.factor_dims()[static_cast<std::size_t>(l)];
        const double d = (loc.block(i, col, 1, pl) - loc.block(j, col, 1, pl)).norm();
        const auto& fam = families_[static_cast<std::size_t>(l)];
        value *= (l == k) ? corr::corr_deriv(fam, d, xi(l)) : corr::corr(fam, d, xi(l));
        col += pl;
      }
      s(i, j) = value;
      s(j, i) = value;
    }
  return s;
}

}  // namespace gpsep
