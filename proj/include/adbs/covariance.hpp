#pragma once

#include <Eigen/Dense>

namespace adbs {

enum class CovarianceMode { kFull, kDiagonal };

// U_t = lambda I + sum_i g_i g_i^T / m, either exact (U and U^{-1} kept in
// step) or as its diagonal.
class CovarianceState {
 public:
  CovarianceState() = default;
  CovarianceState(CovarianceMode mode, Eigen::Index dim, double lambda);

  CovarianceMode mode() const { return mode_; }
  Eigen::Index dim() const { return dim_; }

  // Folds g g^T / width into U. Full mode updates U^{-1} by Sherman-Morrison.
  void rank_one_update(const Eigen::VectorXd& g, double width);

  // g^T U^{-1} g (diagonal mode uses the diagonal inverse).
  double inverse_quadratic_form(const Eigen::VectorXd& g) const;

  const Eigen::MatrixXd& matrix() const { return u_; }          // full mode
  const Eigen::MatrixXd& inverse() const { return u_inv_; }     // full mode
  const Eigen::VectorXd& diagonal() const { return diag_; }     // diagonal mode

  // ||U U^{-1} - I||_F / ||I||_F, full mode only.
  double inverse_residual() const;

 private:
  CovarianceMode mode_ = CovarianceMode::kDiagonal;
  Eigen::Index dim_ = 0;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd u_inv_;
  Eigen::VectorXd diag_;
};

}  // namespace adbs
