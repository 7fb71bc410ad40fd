#include "adbs/neural_policies.hpp"

#include <cmath>

#include "adbs/error.hpp"

namespace adbs {

namespace {

CovarianceMode resolve_mode(CovarianceChoice choice, Eigen::Index p) {
  switch (choice) {
    case CovarianceChoice::kFull: return CovarianceMode::kFull;
    case CovarianceChoice::kDiagonal: return CovarianceMode::kDiagonal;
    case CovarianceChoice::kAuto: break;
  }
  return p > kFullCovarianceLimit ? CovarianceMode::kDiagonal : CovarianceMode::kFull;
}

void check_hyper(const NeuralHyper& h) {
  if (!(h.lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  if (!(h.nu > 0.0)) throw InvalidInput("nu must be > 0");
  if (!(h.epsilon >= 0.0 && h.epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
}

double width_of(const NeuralPosteriorState& s) {
  return static_cast<double>(s.theta.shape().width);
}

}  // namespace

NeuralPosteriorState make_neural_state(MlpParams theta_init, const NeuralHyper& hyper) {
  check_hyper(hyper);
  NeuralPosteriorState s;
  s.cov = CovarianceState(resolve_mode(hyper.covariance, theta_init.size()), theta_init.size(),
                          hyper.lambda);
  s.theta = theta_init;
  s.theta_init = std::move(theta_init);
  s.lambda = hyper.lambda;
  s.nu = hyper.nu;
  s.epsilon = hyper.epsilon;
  s.fit = hyper.fit;
  s.fit.lambda = hyper.lambda;
  return s;
}

NeuralPosteriorState make_neural_state(const NetShape& shape, const NeuralHyper& hyper,
                                       Rng& init_rng) {
  return make_neural_state(MlpParams::gaussian(shape, init_rng), hyper);
}

double posterior_variance(const Eigen::VectorXd& x, const NeuralPosteriorState& state) {
  const Eigen::VectorXd g = param_gradient(x, state.theta);
  return state.lambda * state.cov.inverse_quadratic_form(g) / width_of(state);
}

namespace {

// Mean and (optionally) variance for each arm from one forward/backward pass.
struct ArmMoments {
  double mean = 0.0;
  double variance = 0.0;
};

ArmMoments moments(const Eigen::VectorXd& x, const NeuralPosteriorState& state) {
  const ForwardGradient fg = forward_with_gradient(x, state.theta);
  return {fg.value, state.lambda * state.cov.inverse_quadratic_form(fg.gradient) /
                        width_of(state)};
}

}  // namespace

ArmScores eps_neural_ts_scores(const ArmContexts& contexts, const NeuralPosteriorState& state,
                               Rng& coin, Rng& sampler, bool per_arm_coin) {
  const auto k_arms = contexts.vectors.size();
  ArmScores out;
  out.scores.resize(k_arms);
  const bool explore_round = !per_arm_coin && coin.uniform() < state.epsilon;
  for (std::size_t k = 0; k < k_arms; ++k) {
    const bool sample_arm = per_arm_coin ? coin.uniform() < state.epsilon : explore_round;
    if (!sample_arm) {
      out.scores[k] = forward(contexts[k], state.theta);
      continue;
    }
    const ArmMoments mk = moments(contexts[k], state);
    ++out.variance_evaluations;
    out.scores[k] = mk.mean + state.nu * std::sqrt(mk.variance) * sampler.normal();
    out.explored = true;
  }
  return out;
}

ArmScores neural_ts_scores(const ArmContexts& contexts, const NeuralPosteriorState& state,
                           Rng& sampler) {
  ArmScores out;
  out.scores.resize(contexts.vectors.size());
  for (std::size_t k = 0; k < contexts.vectors.size(); ++k) {
    const ArmMoments mk = moments(contexts[k], state);
    ++out.variance_evaluations;
    out.scores[k] = mk.mean + state.nu * std::sqrt(mk.variance) * sampler.normal();
  }
  out.explored = true;
  return out;
}

ArmScores neural_ucb_scores(const ArmContexts& contexts, const NeuralPosteriorState& state) {
  ArmScores out;
  out.scores.resize(contexts.vectors.size());
  for (std::size_t k = 0; k < contexts.vectors.size(); ++k) {
    const ArmMoments mk = moments(contexts[k], state);
    ++out.variance_evaluations;
    out.scores[k] = mk.mean + state.nu * std::sqrt(mk.variance);
  }
  return out;
}

Decision neural_eps_greedy_select(const ArmContexts& contexts,
                                  const NeuralPosteriorState& state, int round,
                                  double schedule_c, Rng& rng) {
  if (round < 1) throw InvalidInput("neural epsilon-greedy: round must be >= 1");
  const double explore_p = std::min(1.0, schedule_c / static_cast<double>(round));
  if (rng.uniform() < explore_p) {
    return {rng.uniform_index(static_cast<int>(contexts.vectors.size())), true};
  }
  std::vector<double> means(contexts.vectors.size());
  for (std::size_t k = 0; k < means.size(); ++k) means[k] = forward(contexts[k], state.theta);
  return {select_arm(means), false};
}

NeuralPosteriorState update_neural_state(NeuralPosteriorState state,
                                         std::span<const Sample> batch) {
  if (batch.empty()) return state;
  for (const auto& s : batch) state.history.push(s.context, s.reward);
  FitResult fit = fit_regularized(state.history, state.theta_init, state.theta, state.fit);
  state.theta = std::move(fit.params);
  const double m = width_of(state);
  for (const auto& s : batch) state.cov.rank_one_update(param_gradient(s.context, state.theta), m);
  state.round += static_cast<int>(batch.size());
  return state;
}

NeuralPosteriorState update_neural_state(NeuralPosteriorState state,
                                         const Eigen::VectorXd& x_chosen, double reward) {
  const Sample s{0, x_chosen, reward};
  return update_neural_state(std::move(state), std::span<const Sample>(&s, 1));
}

nlohmann::json params_to_json(const MlpParams& params) {
  const auto& s = params.shape();
  const auto& flat = params.flat();
  return {{"input_dim", s.input_dim},
          {"width", s.width},
          {"depth", s.depth},
          {"flat", std::vector<double>(flat.data(), flat.data() + flat.size())}};
}

MlpParams params_from_json(const nlohmann::json& j) {
  NetShape shape{j.at("input_dim").get<int>(), j.at("width").get<int>(),
                 j.at("depth").get<int>()};
  const auto values = j.at("flat").get<std::vector<double>>();
  return MlpParams(shape, Eigen::Map<const Eigen::VectorXd>(
                              values.data(), static_cast<Eigen::Index>(values.size())));
}

NeuralPolicy::NeuralPolicy(NeuralKind kind, const NetShape& shape, const NeuralHyper& hyper,
                           std::uint64_t seed, double greedy_c)
    : kind_(kind),
      per_arm_coin_(hyper.per_arm_coin),
      greedy_c_(greedy_c),
      coin_(derive_seed(seed, stream::kBranchCoin)),
      sampler_(derive_seed(seed, stream::kPosteriorSample)) {
  if (kind_ == NeuralKind::kNeuralEpsGreedy && !(greedy_c_ >= 0.0)) {
    throw InvalidInput("epsilon-greedy schedule constant must be >= 0");
  }
  Rng init(derive_seed(seed, stream::kInit));
  state_ = make_neural_state(shape, hyper, init);
}

std::string NeuralPolicy::name() const {
  switch (kind_) {
    case NeuralKind::kEpsNeuralTs: return "eps_neural_ts";
    case NeuralKind::kNeuralTs: return "neural_ts";
    case NeuralKind::kNeuralUcb: return "neural_ucb";
    case NeuralKind::kNeuralEpsGreedy: return "neural_eps_greedy";
  }
  return "neural";
}

Decision NeuralPolicy::select(const ArmContexts& contexts, int round) {
  Decision d;
  if (kind_ == NeuralKind::kNeuralEpsGreedy) {
    d = neural_eps_greedy_select(contexts, state_, round, greedy_c_, coin_);
  } else {
    ArmScores scores;
    switch (kind_) {
      case NeuralKind::kEpsNeuralTs:
        scores = eps_neural_ts_scores(contexts, state_, coin_, sampler_, per_arm_coin_);
        break;
      case NeuralKind::kNeuralTs: scores = neural_ts_scores(contexts, state_, sampler_); break;
      default: scores = neural_ucb_scores(contexts, state_); break;
    }
    counters_.variance_evaluations += scores.variance_evaluations;
    d = {select_arm(scores.scores), scores.explored};
  }
  if (d.explored) ++counters_.explore_rounds;
  return d;
}

void NeuralPolicy::update(std::span<const Sample> batch) {
  if (batch.empty()) return;
  state_ = update_neural_state(std::move(state_), batch);
  ++counters_.fit_calls;
  ++counters_.update_batches;
  counters_.samples_seen += static_cast<long>(batch.size());
}

nlohmann::json NeuralPolicy::snapshot() const {
  return {{"policy", name()},
          {"round", state_.round},
          {"lambda", state_.lambda},
          {"nu", state_.nu},
          {"epsilon", state_.epsilon},
          {"covariance", state_.cov.mode() == CovarianceMode::kFull ? "full" : "diagonal"},
          {"theta", params_to_json(state_.theta)}};
}

}  // namespace adbs
