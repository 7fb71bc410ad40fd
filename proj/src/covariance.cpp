#include "adbs/covariance.hpp"

#include <cmath>

#include "adbs/error.hpp"

namespace adbs {

CovarianceState::CovarianceState(CovarianceMode mode, Eigen::Index dim, double lambda)
    : mode_(mode), dim_(dim) {
  if (dim < 1) throw InvalidInput("covariance dimension must be >= 1");
  if (!(lambda > 0.0)) throw InvalidInput("covariance needs lambda > 0");
  if (mode_ == CovarianceMode::kFull) {
    u_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
    u_inv_ = (1.0 / lambda) * Eigen::MatrixXd::Identity(dim, dim);
  } else {
    diag_ = Eigen::VectorXd::Constant(dim, lambda);
  }
}

void CovarianceState::rank_one_update(const Eigen::VectorXd& g, double width) {
  if (g.size() != dim_) throw InvalidInput("covariance update: dimension mismatch");
  if (mode_ == CovarianceMode::kDiagonal) {
    diag_ += g.cwiseAbs2() / width;
    return;
  }
  const Eigen::VectorXd ug = u_inv_ * g;
  const double denom = width + g.dot(ug);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw InternalConsistency("covariance update: Sherman-Morrison denominator not positive");
  }
  u_.noalias() += (g * g.transpose()) / width;
  u_inv_.noalias() -= (ug * ug.transpose()) / denom;
  // Keep the stored inverse exactly symmetric.
  u_inv_ = 0.5 * (u_inv_ + u_inv_.transpose()).eval();
}

double CovarianceState::inverse_quadratic_form(const Eigen::VectorXd& g) const {
  if (g.size() != dim_) throw InvalidInput("covariance: dimension mismatch");
  if (mode_ == CovarianceMode::kDiagonal) {
    if ((diag_.array() <= 0.0).any()) {
      throw InternalConsistency("diagonal covariance has a non-positive entry");
    }
    return (g.cwiseAbs2().array() / diag_.array()).sum();
  }
  const double q = g.dot(u_inv_ * g);
  const double scale = g.squaredNorm() * u_inv_.diagonal().cwiseAbs().maxCoeff();
  if (q < -1e-10 * (1.0 + scale) || !std::isfinite(q)) {
    throw InternalConsistency("covariance inverse is not positive definite");
  }
  return q < 0.0 ? 0.0 : q;
}

double CovarianceState::inverse_residual() const {
  if (mode_ != CovarianceMode::kFull) return 0.0;
  const auto eye = Eigen::MatrixXd::Identity(dim_, dim_);
  return (u_ * u_inv_ - eye).norm() / eye.norm();
}

}  // namespace adbs
