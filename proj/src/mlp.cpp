#include "adbs/mlp.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <string>

#include "adbs/error.hpp"

namespace adbs {

namespace {

void check_shape(const NetShape& s) {
  if (s.input_dim < 1 || s.width < 1 || s.depth < 2) {
    throw InvalidInput("network needs input_dim >= 1, width >= 1, depth >= 2");
  }
}

// Row-major sparse design matrix; contexts are block one-hot so most of each
// row is zero.
Eigen::SparseMatrix<double, Eigen::RowMajor> design_matrix(const RewardHistory& h) {
  const auto n = static_cast<Eigen::Index>(h.size());
  const auto d = h.contexts().front().size();
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& x = h.contexts()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      if (x[j] != 0.0) entries.emplace_back(i, j, x[j]);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> X(n, d);
  X.setFromTriplets(entries.begin(), entries.end());
  return X;
}

struct BatchPass {
  double data_loss = 0.0;
  Eigen::VectorXd gradient;  // data term only
};

// Forward over the whole history and, when requested, the data-term gradient.
BatchPass batch_pass(const Eigen::SparseMatrix<double, Eigen::RowMajor>& X,
                     const Eigen::VectorXd& rewards, const MlpParams& params,
                     bool want_gradient) {
  const int depth = params.shape().depth;
  const double root_m = std::sqrt(static_cast<double>(params.shape().width));

  // pre[l] is n x rows(W_l); post[l] = relu(pre[l]).
  std::vector<Eigen::MatrixXd> pre(static_cast<std::size_t>(depth));
  pre[0] = X * params.layer(0).transpose();
  for (int l = 1; l < depth; ++l) {
    pre[static_cast<std::size_t>(l)] =
        pre[static_cast<std::size_t>(l - 1)].cwiseMax(0.0) * params.layer(l).transpose();
  }
  const Eigen::VectorXd residual = root_m * pre.back().col(0) - rewards;

  BatchPass out;
  out.data_loss = 0.5 * residual.squaredNorm();
  if (!want_gradient) return out;

  out.gradient.resize(params.size());
  Eigen::MatrixXd delta = root_m * residual;  // n x 1, d loss / d pre[L-1]
  for (int l = depth - 1; l >= 0; --l) {
    const auto rows = params.layer_rows(l);
    const auto cols = params.layer_cols(l);
    Eigen::Map<Eigen::MatrixXd> g(out.gradient.data() + params.layer_offset(l), rows, cols);
    if (l == 0) {
      g = (X.transpose() * delta).transpose();
    } else {
      const auto& below = pre[static_cast<std::size_t>(l - 1)];
      g = delta.transpose() * below.cwiseMax(0.0);
      delta = (delta * params.layer(l)).cwiseProduct(
          (below.array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

}  // namespace

Eigen::Index NetShape::param_count() const {
  const Eigen::Index m = width;
  return m * input_dim + static_cast<Eigen::Index>(depth - 2) * m * m + m;
}

MlpParams::MlpParams(NetShape shape, Eigen::VectorXd flat)
    : shape_(shape), flat_(std::move(flat)) {
  check_shape(shape_);
  if (flat_.size() != shape_.param_count()) {
    throw InvalidInput("MlpParams: flat vector has " + std::to_string(flat_.size()) +
                       " entries, shape needs " + std::to_string(shape_.param_count()));
  }
}

MlpParams MlpParams::zeros(const NetShape& shape) {
  check_shape(shape);
  return MlpParams(shape, Eigen::VectorXd::Zero(shape.param_count()));
}

MlpParams MlpParams::gaussian(const NetShape& shape, Rng& rng) {
  MlpParams p = zeros(shape);
  for (int l = 0; l < shape.depth; ++l) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(p.layer_cols(l)));
    const auto offset = p.layer_offset(l);
    const auto count = p.layer_rows(l) * p.layer_cols(l);
    for (Eigen::Index i = 0; i < count; ++i) p.flat_[offset + i] = rng.normal(0.0, stddev);
  }
  return p;
}

Eigen::Index MlpParams::layer_rows(int index) const {
  return index == shape_.depth - 1 ? 1 : shape_.width;
}

Eigen::Index MlpParams::layer_cols(int index) const {
  return index == 0 ? shape_.input_dim : shape_.width;
}

Eigen::Index MlpParams::layer_offset(int index) const {
  const Eigen::Index m = shape_.width;
  if (index == 0) return 0;
  return m * shape_.input_dim + static_cast<Eigen::Index>(index - 1) * m * m;
}

Eigen::Map<const Eigen::MatrixXd> MlpParams::layer(int index) const {
  return {flat_.data() + layer_offset(index), layer_rows(index), layer_cols(index)};
}

ForwardGradient forward_with_gradient(const Eigen::VectorXd& x, const MlpParams& params) {
  const auto& shape = params.shape();
  if (x.size() != shape.input_dim) {
    throw InvalidInput("forward: input has dimension " + std::to_string(x.size()) +
                       ", network expects " + std::to_string(shape.input_dim));
  }
  const int depth = shape.depth;
  const double root_m = std::sqrt(static_cast<double>(shape.width));

  std::vector<Eigen::VectorXd> pre(static_cast<std::size_t>(depth));
  pre[0] = params.layer(0) * x;
  for (int l = 1; l < depth; ++l) {
    pre[static_cast<std::size_t>(l)] =
        params.layer(l) * pre[static_cast<std::size_t>(l - 1)].cwiseMax(0.0);
  }

  ForwardGradient out;
  out.value = root_m * pre.back()[0];
  out.gradient.resize(params.size());
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, root_m);
  for (int l = depth - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd> g(out.gradient.data() + params.layer_offset(l),
                                  params.layer_rows(l), params.layer_cols(l));
    if (l == 0) {
      g.noalias() = delta * x.transpose();
    } else {
      const auto& below = pre[static_cast<std::size_t>(l - 1)];
      g.noalias() = delta * below.cwiseMax(0.0).transpose();
      delta = (params.layer(l).transpose() * delta)
                  .cwiseProduct((below.array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

double forward(const Eigen::VectorXd& x, const MlpParams& params) {
  const auto& shape = params.shape();
  if (x.size() != shape.input_dim) {
    throw InvalidInput("forward: input has dimension " + std::to_string(x.size()) +
                       ", network expects " + std::to_string(shape.input_dim));
  }
  Eigen::VectorXd h = params.layer(0) * x;
  for (int l = 1; l < shape.depth; ++l) h = params.layer(l) * h.cwiseMax(0.0);
  return std::sqrt(static_cast<double>(shape.width)) * h[0];
}

Eigen::VectorXd param_gradient(const Eigen::VectorXd& x, const MlpParams& params) {
  return forward_with_gradient(x, params).gradient;
}

void RewardHistory::push(Eigen::VectorXd context, double reward) {
  if (!std::isfinite(reward)) throw InvalidInput("RewardHistory: reward must be finite");
  if (!contexts_.empty() && context.size() != contexts_.front().size()) {
    throw InvalidInput("RewardHistory: context dimension mismatch");
  }
  contexts_.push_back(std::move(context));
  rewards_.push_back(reward);
}

double regularized_loss(const RewardHistory& history, const MlpParams& theta,
                        const MlpParams& theta_init, double lambda) {
  double data = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double r = forward(history.contexts()[i], theta) - history.rewards()[i];
    data += 0.5 * r * r;
  }
  const double m = theta.shape().width;
  return data + 0.5 * m * lambda * (theta.flat() - theta_init.flat()).squaredNorm();
}

FitResult fit_regularized(const RewardHistory& history, const MlpParams& theta_init,
                          const MlpParams& theta_warm, const FitOptions& options) {
  if (history.empty()) throw InvalidInput("fit_regularized: empty history");
  if (!(options.lambda > 0.0)) throw InvalidInput("fit_regularized: lambda must be > 0");
  if (options.steps < 1) throw InvalidInput("fit_regularized: steps must be >= 1");
  if (!(options.learning_rate > 0.0)) {
    throw InvalidInput("fit_regularized: learning rate must be > 0");
  }
  if (!(theta_init.shape() == theta_warm.shape())) {
    throw InvalidInput("fit_regularized: theta_0 and warm start differ in shape");
  }
  if (history.contexts().front().size() != theta_init.shape().input_dim) {
    throw InvalidInput("fit_regularized: history dimension does not match the network");
  }

  const auto X = design_matrix(history);
  const Eigen::Map<const Eigen::VectorXd> rewards(history.rewards().data(),
                                                  static_cast<Eigen::Index>(history.size()));
  const double reg = static_cast<double>(theta_init.shape().width) * options.lambda;

  auto total_loss = [&](const BatchPass& pass, const MlpParams& theta) {
    return pass.data_loss + 0.5 * reg * (theta.flat() - theta_init.flat()).squaredNorm();
  };
  auto diverged = [](int step) {
    return DivergenceError("fit_regularized: non-finite loss at step " + std::to_string(step),
                           step);
  };

  MlpParams theta = theta_warm;
  BatchPass pass = batch_pass(X, rewards, theta, true);
  double loss = total_loss(pass, theta);
  if (!std::isfinite(loss)) throw diverged(0);

  FitResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(options.steps) + 1);
  result.loss_trace.push_back(loss);
  double rate = options.learning_rate;
  bool stalled = false;
  for (int step = 1; step <= options.steps; ++step) {
    if (stalled) {
      result.loss_trace.push_back(loss);
      continue;
    }
    const Eigen::VectorXd direction = pass.gradient + reg * (theta.flat() - theta_init.flat());
    for (int attempt = 0;; ++attempt) {
      MlpParams next(theta.shape(), theta.flat() - rate * direction);
      BatchPass next_pass = batch_pass(X, rewards, next, true);
      const double next_loss = total_loss(next_pass, next);
      if (!options.backtracking) {
        if (!std::isfinite(next_loss)) throw diverged(step);
      } else if (!(next_loss <= loss)) {
        ++result.rejected_steps;
        if (attempt >= options.max_halvings) {
          stalled = true;
          break;
        }
        rate *= 0.5;
        continue;
      }
      theta = std::move(next);
      pass = std::move(next_pass);
      loss = next_loss;
      break;
    }
    result.loss_trace.push_back(loss);
  }
  result.final_learning_rate = rate;
  result.initial_loss = result.loss_trace.front();
  result.final_loss = result.loss_trace.back();
  result.params = std::move(theta);
  return result;
}

}  // namespace adbs
