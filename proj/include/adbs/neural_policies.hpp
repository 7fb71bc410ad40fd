#pragma once

#include <span>
#include <vector>

#include "adbs/covariance.hpp"
#include "adbs/mlp.hpp"
#include "adbs/policy.hpp"
#include "adbs/rng.hpp"

namespace adbs {

// Parameter counts above this use the diagonal covariance by default.
inline constexpr Eigen::Index kFullCovarianceLimit = 2000;

enum class CovarianceChoice { kAuto, kFull, kDiagonal };

struct NeuralHyper {
  double lambda = 1.0;
  double nu = 1.0;
  double epsilon = 0.8;
  FitOptions fit{};  // lambda in here is overwritten by `lambda`
  CovarianceChoice covariance = CovarianceChoice::kAuto;
  bool per_arm_coin = false;
};

// Full state of the epsilon-NeuralTS learner and its neural relatives.
struct NeuralPosteriorState {
  MlpParams theta;
  MlpParams theta_init;
  CovarianceState cov;
  double lambda = 1.0;
  double nu = 1.0;
  double epsilon = 0.8;
  FitOptions fit{};
  RewardHistory history;
  int round = 0;
};

NeuralPosteriorState make_neural_state(const NetShape& shape, const NeuralHyper& hyper,
                                       Rng& init_rng);
NeuralPosteriorState make_neural_state(MlpParams theta_init, const NeuralHyper& hyper);

// sigma^2 = lambda g^T U^{-1} g / m with g = g(x; theta_{t-1}).
double posterior_variance(const Eigen::VectorXd& x, const NeuralPosteriorState& state);

struct ArmScores {
  std::vector<double> scores;
  bool explored = false;
  int variance_evaluations = 0;
};

// One branch coin per round (or per arm when per_arm_coin): with probability
// epsilon the arm score is drawn from N(f(x), nu^2 sigma^2), otherwise it is f(x).
ArmScores eps_neural_ts_scores(const ArmContexts& contexts, const NeuralPosteriorState& state,
                               Rng& coin, Rng& sampler, bool per_arm_coin = false);

// Vanilla NeuralTS: always samples; draws nothing from a coin stream.
ArmScores neural_ts_scores(const ArmContexts& contexts, const NeuralPosteriorState& state,
                           Rng& sampler);

// f(x) + nu * sigma.
ArmScores neural_ucb_scores(const ArmContexts& contexts, const NeuralPosteriorState& state);

// Random arm with probability min(1, c / t), otherwise greedy on f.
Decision neural_eps_greedy_select(const ArmContexts& contexts,
                                  const NeuralPosteriorState& state, int round,
                                  double schedule_c, Rng& rng);

NeuralPosteriorState update_neural_state(NeuralPosteriorState state,
                                         std::span<const Sample> batch);
NeuralPosteriorState update_neural_state(NeuralPosteriorState state,
                                         const Eigen::VectorXd& x_chosen, double reward);

nlohmann::json params_to_json(const MlpParams& params);
MlpParams params_from_json(const nlohmann::json& j);

enum class NeuralKind { kEpsNeuralTs, kNeuralTs, kNeuralUcb, kNeuralEpsGreedy };

class NeuralPolicy : public Policy {
 public:
  NeuralPolicy(NeuralKind kind, const NetShape& shape, const NeuralHyper& hyper,
               std::uint64_t seed, double greedy_c = 5.0);

  std::string name() const override;
  Decision select(const ArmContexts& contexts, int round) override;
  void update(std::span<const Sample> batch) override;
  nlohmann::json snapshot() const override;

  const NeuralPosteriorState& state() const { return state_; }

 private:
  NeuralKind kind_;
  NeuralPosteriorState state_;
  bool per_arm_coin_;
  double greedy_c_;
  Rng coin_;
  Rng sampler_;
};

}  // namespace adbs
