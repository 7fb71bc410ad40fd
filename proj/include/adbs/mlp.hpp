#pragma once

#include <vector>

#include <Eigen/Dense>

#include "adbs/rng.hpp"

namespace adbs {

// Bias-free ReLU network f(x) = sqrt(m) * W_L relu(... relu(W_1 x)).
struct NetShape {
  int input_dim = 0;
  int width = 32;
  int depth = 3;  // number of weight matrices, >= 2

  // p = m*d + (L-2)*m^2 + m
  Eigen::Index param_count() const;
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// Weights stored flat as theta = (vec(W_1); ...; vec(W_L)), column-major vec.
// Layer views alias the flat buffer, so the two views cannot disagree.
class MlpParams {
 public:
  MlpParams() = default;
  MlpParams(NetShape shape, Eigen::VectorXd flat);

  static MlpParams zeros(const NetShape& shape);
  // N(0, 1/fan_in) per layer.
  static MlpParams gaussian(const NetShape& shape, Rng& rng);

  const NetShape& shape() const { return shape_; }
  const Eigen::VectorXd& flat() const { return flat_; }
  Eigen::Index size() const { return flat_.size(); }

  // Rows x cols of layer `index` (0-based).
  Eigen::Index layer_rows(int index) const;
  Eigen::Index layer_cols(int index) const;
  Eigen::Index layer_offset(int index) const;
  Eigen::Map<const Eigen::MatrixXd> layer(int index) const;

 private:
  NetShape shape_;
  Eigen::VectorXd flat_;
};

double forward(const Eigen::VectorXd& x, const MlpParams& params);

// g(x; theta) = d f / d theta, in the ordering of MlpParams::flat().
// ReLU subgradient at exactly zero is taken as zero.
Eigen::VectorXd param_gradient(const Eigen::VectorXd& x, const MlpParams& params);

struct ForwardGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
ForwardGradient forward_with_gradient(const Eigen::VectorXd& x, const MlpParams& params);

class RewardHistory {
 public:
  void push(Eigen::VectorXd context, double reward);
  std::size_t size() const { return rewards_.size(); }
  bool empty() const { return rewards_.empty(); }
  const std::vector<Eigen::VectorXd>& contexts() const { return contexts_; }
  const std::vector<double>& rewards() const { return rewards_; }

 private:
  std::vector<Eigen::VectorXd> contexts_;
  std::vector<double> rewards_;
};

struct FitOptions {
  double lambda = 1.0;
  int steps = 100;
  double learning_rate = 0.01;
  // A step that raises the loss (or makes it non-finite) is retried at half
  // the rate, up to max_halvings times. Off means plain fixed-step descent.
  bool backtracking = true;
  int max_halvings = 40;
};

struct FitResult {
  MlpParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // steps + 1 entries, loss before each step then final
  int rejected_steps = 0;
  double final_learning_rate = 0.0;
};

// L(theta) = sum_i (f(x_i) - R_i)^2 / 2 + m * lambda * |theta - theta_0|^2 / 2
double regularized_loss(const RewardHistory& history, const MlpParams& theta,
                        const MlpParams& theta_init, double lambda);

// Full-batch gradient descent on regularized_loss, started from theta_warm.
// Throws DivergenceError if the loss becomes non-finite (fixed-step mode) or
// is non-finite at the warm start.
FitResult fit_regularized(const RewardHistory& history, const MlpParams& theta_init,
                          const MlpParams& theta_warm, const FitOptions& options);

}  // namespace adbs
