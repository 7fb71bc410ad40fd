#include "adbs/linear_policies.hpp"

#include <cmath>

#include "adbs/error.hpp"

namespace adbs {

LinearPolicyState make_linear_state(LinearFlavor flavor, Eigen::Index dim,
                                    const LinearHyper& hyper) {
  if (dim < 1) throw InvalidInput("linear policy dimension must be >= 1");
  if (!(hyper.lambda > 0.0)) throw InvalidInput("linear policy needs lambda > 0");
  if (!(hyper.alpha >= 0.0)) throw InvalidInput("alpha must be >= 0");
  if (!(hyper.nu >= 0.0)) throw InvalidInput("nu must be >= 0");
  LinearPolicyState s;
  s.flavor = flavor;
  s.design = hyper.lambda * Eigen::MatrixXd::Identity(dim, dim);
  s.design_inverse = (1.0 / hyper.lambda) * Eigen::MatrixXd::Identity(dim, dim);
  s.response = Eigen::VectorXd::Zero(dim);
  s.lambda = hyper.lambda;
  s.alpha = hyper.alpha;
  s.nu = hyper.nu;
  s.glm_newton_iterations = hyper.glm_newton_iterations;
  s.glm_weights = Eigen::VectorXd::Zero(dim);
  return s;
}

namespace {

double width_term(const Eigen::VectorXd& x, const LinearPolicyState& s) {
  const double q = x.dot(s.design_inverse * x);
  if (q < -1e-12) throw InternalConsistency("linear design inverse is not positive definite");
  return std::sqrt(std::max(q, 0.0));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<double> linear_scores(const ArmContexts& contexts, const LinearPolicyState& state,
                                  Rng& rng) {
  const auto dim = state.response.size();
  for (const auto& x : contexts.vectors) {
    if (x.size() != dim) throw InvalidInput("linear policy: context dimension mismatch");
  }
  std::vector<double> scores(contexts.vectors.size());
  switch (state.flavor) {
    case LinearFlavor::kLinUcb: {
      const Eigen::VectorXd w = state.ridge_estimate();
      for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k] = contexts[k].dot(w) + state.alpha * width_term(contexts[k], state);
      }
      break;
    }
    case LinearFlavor::kLinTs: {
      const Eigen::LLT<Eigen::MatrixXd> chol(state.design_inverse);
      if (chol.info() != Eigen::Success) {
        throw InternalConsistency("linear design inverse is not positive definite");
      }
      Eigen::VectorXd z(dim);
      for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
      const Eigen::VectorXd perturb = chol.matrixL() * z;
      const Eigen::VectorXd w = state.ridge_estimate() + state.nu * perturb;
      for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = contexts[k].dot(w);
      break;
    }
    case LinearFlavor::kUcbGlm: {
      for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k] = contexts[k].dot(state.glm_weights) +
                    state.alpha * width_term(contexts[k], state);
      }
      break;
    }
  }
  return scores;
}

int linear_policy_step(const ArmContexts& contexts, const LinearPolicyState& state, Rng& rng) {
  return select_arm(linear_scores(contexts, state, rng));
}

Eigen::VectorXd fit_glm(const LinearPolicyState& s, const Eigen::VectorXd& start) {
  const auto dim = s.response.size();
  const std::size_t n = s.glm_rewards.size();
  if (n == 0) return Eigen::VectorXd::Zero(dim);
  const double range = s.reward_max - s.reward_min;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = range > 0.0 ? (s.glm_rewards[i] - s.reward_min) / range : 0.5;
  }
  Eigen::VectorXd w = start;
  for (int it = 0; it < s.glm_newton_iterations; ++it) {
    Eigen::VectorXd grad = s.lambda * w;
    Eigen::MatrixXd hess = s.lambda * Eigen::MatrixXd::Identity(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& x = s.glm_contexts[i];
      const double p = logistic(x.dot(w));
      grad += (p - y[i]) * x;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(x, p * (1.0 - p));
    }
    const Eigen::VectorXd step = hess.selfadjointView<Eigen::Lower>().ldlt().solve(grad);
    w -= step;
    if (step.norm() < 1e-10 * (1.0 + w.norm())) break;
  }
  return w;
}

LinearPolicyState update_linear_state(LinearPolicyState s, const Eigen::VectorXd& x,
                                      double reward) {
  if (x.size() != s.response.size()) throw InvalidInput("linear update: dimension mismatch");
  if (!std::isfinite(reward)) throw InvalidInput("linear update: reward must be finite");
  const Eigen::VectorXd ax = s.design_inverse * x;
  const double denom = 1.0 + x.dot(ax);
  if (!(denom > 0.0)) throw InternalConsistency("linear update: singular design matrix");
  s.design.noalias() += x * x.transpose();
  s.design_inverse.noalias() -= (ax * ax.transpose()) / denom;
  s.response += reward * x;
  if (s.flavor == LinearFlavor::kUcbGlm) {
    s.glm_contexts.push_back(x);
    s.glm_rewards.push_back(reward);
    s.reward_min = std::min(s.reward_min, reward);
    s.reward_max = std::max(s.reward_max, reward);
    s.glm_weights = fit_glm(s, s.glm_weights);
  }
  return s;
}

LinearPolicy::LinearPolicy(LinearFlavor flavor, Eigen::Index dim, const LinearHyper& hyper,
                           std::uint64_t seed)
    : state_(make_linear_state(flavor, dim, hyper)),
      rng_(derive_seed(seed, stream::kPosteriorSample)) {}

std::string LinearPolicy::name() const {
  switch (state_.flavor) {
    case LinearFlavor::kLinUcb: return "lin_ucb";
    case LinearFlavor::kLinTs: return "lin_ts";
    case LinearFlavor::kUcbGlm: return "ucb_glm";
  }
  return "linear";
}

Decision LinearPolicy::select(const ArmContexts& contexts, int) {
  const bool sampled = state_.flavor == LinearFlavor::kLinTs;
  if (sampled) ++counters_.explore_rounds;
  return {linear_policy_step(contexts, state_, rng_), sampled};
}

void LinearPolicy::update(std::span<const Sample> batch) {
  if (batch.empty()) return;
  for (const auto& s : batch) state_ = update_linear_state(std::move(state_), s.context, s.reward);
  ++counters_.update_batches;
  counters_.samples_seen += static_cast<long>(batch.size());
}

nlohmann::json LinearPolicy::snapshot() const {
  const Eigen::VectorXd w =
      state_.flavor == LinearFlavor::kUcbGlm ? state_.glm_weights : state_.ridge_estimate();
  return {{"policy", name()},
          {"lambda", state_.lambda},
          {"alpha", state_.alpha},
          {"nu", state_.nu},
          {"weights", std::vector<double>(w.data(), w.data() + w.size())}};
}

Ucb1State make_ucb1_state(int arm_count, std::optional<double> delta) {
  if (arm_count < 1) throw InvalidInput("UCB1 needs at least one arm");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw InvalidInput("UCB1 delta must be in (0,1)");
  Ucb1State s;
  s.pull_counts.assign(static_cast<std::size_t>(arm_count), 0);
  s.empirical_means.assign(static_cast<std::size_t>(arm_count), 0.0);
  s.delta = delta;
  return s;
}

double ucb1_index(const Ucb1State& state, int arm, int round) {
  if (round < 1) throw InvalidInput("UCB1: round must be >= 1");
  const auto k = static_cast<std::size_t>(arm);
  if (k >= state.pull_counts.size()) throw InvalidInput("UCB1: arm out of range");
  const long pulls = state.pull_counts[k];
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  // log(1/delta); with delta_t = 1/t^2 this is 2 log t.
  const double log_inv_delta =
      state.delta ? -std::log(*state.delta) : 2.0 * std::log(static_cast<double>(round));
  return state.empirical_means[k] + std::sqrt(2.0 * log_inv_delta / static_cast<double>(pulls));
}

Ucb1State update_ucb1_state(Ucb1State state, int arm, double reward) {
  const auto k = static_cast<std::size_t>(arm);
  if (k >= state.pull_counts.size()) throw InvalidInput("UCB1: arm out of range");
  if (!std::isfinite(reward)) throw InvalidInput("UCB1: reward must be finite");
  const long n = ++state.pull_counts[k];
  state.empirical_means[k] += (reward - state.empirical_means[k]) / static_cast<double>(n);
  return state;
}

Ucb1Policy::Ucb1Policy(int arm_count, std::optional<double> delta)
    : state_(make_ucb1_state(arm_count, delta)) {}

Decision Ucb1Policy::select(const ArmContexts& contexts, int round) {
  const int arms = static_cast<int>(state_.pull_counts.size());
  if (contexts.arm_count != arms) throw InvalidInput("UCB1: arm count mismatch");
  std::vector<double> index(static_cast<std::size_t>(arms));
  for (int k = 0; k < arms; ++k) {
    index[static_cast<std::size_t>(k)] = ucb1_index(state_, k, round);
    // Unplayed arms come first, lowest index on ties.
    if (std::isinf(index[static_cast<std::size_t>(k)])) return {k, true};
  }
  return {select_arm(index), false};
}

void Ucb1Policy::update(std::span<const Sample> batch) {
  for (const auto& s : batch) state_ = update_ucb1_state(std::move(state_), s.arm, s.reward);
  ++counters_.update_batches;
  counters_.samples_seen += static_cast<long>(batch.size());
}

nlohmann::json Ucb1Policy::snapshot() const {
  return {{"policy", name()},
          {"pull_counts", state_.pull_counts},
          {"empirical_means", state_.empirical_means}};
}

}  // namespace adbs
