#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "adbs/policy.hpp"
#include "adbs/rng.hpp"

namespace adbs {

enum class LinearFlavor { kLinUcb, kLinTs, kUcbGlm };

struct LinearHyper {
  double lambda = 1.0;
  double alpha = 1.0;  // confidence-width multiplier (LinUCB, UCB-GLM)
  double nu = 1.0;     // posterior scale (LinTS)
  int glm_newton_iterations = 20;
};

// A = lambda I + sum x x^T with A^{-1} kept by Sherman-Morrison; b = sum R x.
struct LinearPolicyState {
  LinearFlavor flavor = LinearFlavor::kLinUcb;
  Eigen::MatrixXd design;
  Eigen::MatrixXd design_inverse;
  Eigen::VectorXd response;
  double lambda = 1.0;
  double alpha = 1.0;
  double nu = 1.0;
  int glm_newton_iterations = 20;
  // UCB-GLM: raw history, running reward range and the last fitted weights.
  std::vector<Eigen::VectorXd> glm_contexts;
  std::vector<double> glm_rewards;
  double reward_min = std::numeric_limits<double>::infinity();
  double reward_max = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd glm_weights;

  Eigen::VectorXd ridge_estimate() const { return design_inverse * response; }
};

LinearPolicyState make_linear_state(LinearFlavor flavor, Eigen::Index dim,
                                    const LinearHyper& hyper);

// Per-arm scores for the configured flavour (LinTS draws from rng).
std::vector<double> linear_scores(const ArmContexts& contexts, const LinearPolicyState& state,
                                  Rng& rng);
int linear_policy_step(const ArmContexts& contexts, const LinearPolicyState& state, Rng& rng);
LinearPolicyState update_linear_state(LinearPolicyState state, const Eigen::VectorXd& x,
                                      double reward);

// Penalized logistic maximum likelihood on rewards rescaled to [0, 1] by the
// running min/max, warm-started from `start`.
Eigen::VectorXd fit_glm(const LinearPolicyState& state, const Eigen::VectorXd& start);

class LinearPolicy : public Policy {
 public:
  LinearPolicy(LinearFlavor flavor, Eigen::Index dim, const LinearHyper& hyper,
               std::uint64_t seed);
  std::string name() const override;
  Decision select(const ArmContexts& contexts, int round) override;
  void update(std::span<const Sample> batch) override;
  nlohmann::json snapshot() const override;
  const LinearPolicyState& state() const { return state_; }

 private:
  LinearPolicyState state_;
  Rng rng_;
};

struct Ucb1State {
  std::vector<long> pull_counts;
  std::vector<double> empirical_means;
  std::optional<double> delta;  // fixed delta; otherwise delta_t = 1 / t^2
};

Ucb1State make_ucb1_state(int arm_count, std::optional<double> delta = std::nullopt);

// +inf for unplayed arms, else mean + sqrt(2 log(1/delta) / T_k).
double ucb1_index(const Ucb1State& state, int arm, int round);
Ucb1State update_ucb1_state(Ucb1State state, int arm, double reward);

class Ucb1Policy : public Policy {
 public:
  Ucb1Policy(int arm_count, std::optional<double> delta = std::nullopt);
  std::string name() const override { return "ucb1"; }
  Decision select(const ArmContexts& contexts, int round) override;
  void update(std::span<const Sample> batch) override;
  nlohmann::json snapshot() const override;
  const Ucb1State& state() const { return state_; }

 private:
  Ucb1State state_;
};

// Fixed-frequency stimulation: ignores contexts, always returns one arm.
class PeriodicPolicy : public Policy {
 public:
  explicit PeriodicPolicy(int arm) : arm_(arm) {}
  std::string name() const override { return "periodic"; }
  Decision select(const ArmContexts&, int) override { return {arm_, false}; }
  void update(std::span<const Sample> batch) override {
    ++counters_.update_batches;
    counters_.samples_seen += static_cast<long>(batch.size());
  }
  int arm() const { return arm_; }

 private:
  int arm_;
};

}  // namespace adbs
