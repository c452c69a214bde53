#include "gpsep/linalg.hpp"

#include <cmath>
#include <sstream>

#include "gpsep/common.hpp"

namespace gpsep::kron {

namespace {

using RowMajorMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

long checked_product(const std::vector<Eigen::MatrixXd>& factors) {
  long n = 1;
  for (const auto& f : factors) n *= f.rows();
  return n;
}

}  // namespace

CholResult jittered_cholesky(const Eigen::MatrixXd& a, std::string_view label) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};
  for (double jitter = 1e-12; jitter <= 1.0001e-8; jitter *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal() *= (1.0 + jitter);
    llt.compute(b);
    if (llt.info() == Eigen::Success) {
      std::ostringstream msg;
      msg << "Cholesky of " << label << " needed diagonal jitter " << jitter;
      warn("jittered_cholesky", msg.str());
      return {llt.matrixL(), jitter};
    }
  }
  std::ostringstream msg;
  msg << "matrix " << label << " is not positive definite (jitter up to 1e-8 exhausted)";
  throw NumericalError(msg.str());
}

KroneckerFactors::KroneckerFactors(std::vector<Eigen::MatrixXd> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw InputError("KroneckerFactors: factor list is empty");
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const auto& f = factors_[k];
    if (f.rows() != f.cols() || f.rows() == 0) {
      std::ostringstream msg;
      msg << "KroneckerFactors: factor " << k << " is not square ("
          << f.rows() << "x" << f.cols() << ")";
      throw InputError(msg.str());
    }
    const double asym = (f - f.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
      std::ostringstream msg;
      msg << "KroneckerFactors: factor " << k << " asymmetric by " << asym;
      throw InputError(msg.str());
    }
  }
  total_dim_ = checked_product(factors_);
}

std::vector<int> KroneckerFactors::dims() const {
  std::vector<int> d;
  d.reserve(factors_.size());
  for (const auto& f : factors_) d.push_back(static_cast<int>(f.rows()));
  return d;
}

FactorCholesky::FactorCholesky(const std::vector<Eigen::MatrixXd>& sigmas)
    : total_dim_(1), log_det_(0.0) {
  if (sigmas.empty()) throw InputError("FactorCholesky: factor list is empty");
  lowers_.reserve(sigmas.size());
  dims_.reserve(sigmas.size());
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    std::ostringstream label;
    label << "factor " << k;
    lowers_.push_back(jittered_cholesky(sigmas[k], label.str()).lower);
    dims_.push_back(static_cast<int>(sigmas[k].rows()));
    total_dim_ *= dims_.back();
  }
  // log|(x)Sigma_k| = sum_k n_(k) log|Sigma_k|, n_(k) = n / n_k
  for (std::size_t k = 0; k < lowers_.size(); ++k) {
    const double n_co = static_cast<double>(total_dim_ / dims_[k]);
    log_det_ += n_co * 2.0 * lowers_[k].diagonal().array().log().sum();
  }
}

FactorCholesky::FactorCholesky(const KroneckerFactors& kf)
    : FactorCholesky(kf.factors()) {}

void apply_mode(const Eigen::MatrixXd& m, int k, const std::vector<int>& dims,
                Eigen::VectorXd& x) {
  const int nk = dims[static_cast<std::size_t>(k)];
  long inner = 1, outer = 1;
  for (std::size_t j = static_cast<std::size_t>(k) + 1; j < dims.size(); ++j) inner *= dims[j];
  for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) outer *= dims[j];
  for (long o = 0; o < outer; ++o) {
    Eigen::Map<RowMajorMat> block(x.data() + o * nk * inner, nk, inner);
    block = m * block;
  }
}

Eigen::VectorXd kron_apply(const std::vector<Eigen::MatrixXd>& mats,
                           const std::vector<int>& dims, Eigen::VectorXd x) {
  for (std::size_t k = 0; k < mats.size(); ++k)
    apply_mode(mats[k], static_cast<int>(k), dims, x);
  return x;
}

Eigen::VectorXd FactorCholesky::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != total_dim_)
    throw InputError("FactorCholesky::solve: rhs length does not match total dimension");
  Eigen::VectorXd x = rhs;
  for (std::size_t k = 0; k < lowers_.size(); ++k) {
    const auto& l = lowers_[k];
    const int nk = dims_[k];
    long inner = 1, outer = 1;
    for (std::size_t j = k + 1; j < dims_.size(); ++j) inner *= dims_[j];
    for (std::size_t j = 0; j < k; ++j) outer *= dims_[j];
    for (long o = 0; o < outer; ++o) {
      Eigen::Map<RowMajorMat> block(x.data() + o * nk * inner, nk, inner);
      l.triangularView<Eigen::Lower>().solveInPlace(block);
      l.transpose().triangularView<Eigen::Upper>().solveInPlace(block);
    }
  }
  return x;
}

double FactorCholesky::quadratic_form(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != total_dim_)
    throw InputError("FactorCholesky::quadratic_form: rhs length mismatch");
  Eigen::VectorXd x = rhs;
  for (std::size_t k = 0; k < lowers_.size(); ++k) {
    const auto& l = lowers_[k];
    const int nk = dims_[k];
    long inner = 1, outer = 1;
    for (std::size_t j = k + 1; j < dims_.size(); ++j) inner *= dims_[j];
    for (std::size_t j = 0; j < k; ++j) outer *= dims_[j];
    for (long o = 0; o < outer; ++o) {
      Eigen::Map<RowMajorMat> block(x.data() + o * nk * inner, nk, inner);
      l.triangularView<Eigen::Lower>().solveInPlace(block);
    }
  }
  return x.squaredNorm();
}

Eigen::VectorXd FactorCholesky::apply_lower(const Eigen::VectorXd& z) const {
  if (z.size() != total_dim_)
    throw InputError("FactorCholesky::apply_lower: rhs length mismatch");
  Eigen::VectorXd x = z;
  for (std::size_t k = 0; k < lowers_.size(); ++k)
    apply_mode(lowers_[k], static_cast<int>(k), dims_, x);
  return x;
}

Eigen::MatrixXd kron_expand(const KroneckerFactors& kf, long cap) {
  if (kf.total_dim() > cap) {
    std::ostringstream msg;
    msg << "kron_expand: total dimension " << kf.total_dim()
        << " exceeds expansion cap " << cap;
    throw InputError(msg.str());
  }
  Eigen::MatrixXd out = kf.factor(0);
  for (int k = 1; k < kf.count(); ++k) {
    const Eigen::MatrixXd& b = kf.factor(k);
    Eigen::MatrixXd next(out.rows() * b.rows(), out.cols() * b.cols());
    for (long i = 0; i < out.rows(); ++i)
      for (long j = 0; j < out.cols(); ++j)
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = out(i, j) * b;
    out = std::move(next);
  }
  return out;
}

double kron_logdet(const KroneckerFactors& kf) { return FactorCholesky(kf).log_det(); }

Eigen::VectorXd kron_solve(const KroneckerFactors& kf, const Eigen::VectorXd& rhs) {
  return FactorCholesky(kf).solve(rhs);
}

double kron_quadratic_form(const KroneckerFactors& kf, const Eigen::VectorXd& x) {
  return FactorCholesky(kf).quadratic_form(x);
}

double kron_trace(const KroneckerFactors& kf) {
  double t = 1.0;
  for (const auto& f : kf.factors()) t *= f.trace();
  return t;
}

Eigen::MatrixXd rank_one_update_inverse(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputError("rank_one_update_inverse: matrix not square");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.rows());
  const Eigen::VectorXd left = lu.solve(ones);                    // A^{-1} 1
  const Eigen::VectorXd right = a.transpose().lu().solve(ones);   // A^{-T} 1
  const double denom = 1.0 + ones.dot(left);
  if (std::abs(denom) < 1e-12)
    throw NumericalError("rank_one_update_inverse: 1'A^{-1}1 = -1, update is singular");
  const Eigen::MatrixXd ainv = lu.inverse();
  return ainv - (left * right.transpose()) / denom;
}

}  // namespace gpsep::kron
