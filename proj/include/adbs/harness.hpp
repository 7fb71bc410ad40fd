#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adbs/environment.hpp"
#include "adbs/neural_policies.hpp"
#include "adbs/policy.hpp"

namespace adbs {

inline constexpr const char* kLibraryVersion = "1.0.0";

struct PolicyConfig {
  std::string name = "eps_neural_ts";
  double epsilon = 0.8;
  double nu = 0.3;
  double lambda = 1.0;
  int steps = 100;             // J
  double learning_rate = 0.01; // eta
  double greedy_c = 5.0;       // c in min(1, c / t)
  double alpha = 1.0;          // LinUCB / UCB-GLM width multiplier
  int width = 32;
  int depth = 3;
  CovarianceChoice covariance = CovarianceChoice::kAuto;
  bool per_arm_coin = false;
  double frequency_hz = 90.0;  // periodic controller
  std::optional<double> ucb1_delta;
  // Feed policies x / |x| instead of the raw embedding.
  bool unit_norm_contexts = true;
};

struct RunConfig {
  PolicyConfig policy;
  EnvConfig env;
  int rounds = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int delay = 1;  // reward batch size B
  int threshold_round = 50;
  std::string output = "results";
  std::string format = "csv";

  void validate() const;
};

// Builds the policy named in `config` ("eps_neural_ts", "neural_ts",
// "neural_ucb", "neural_eps_greedy", "lin_ucb", "lin_ts", "ucb_glm", "ucb1",
// "periodic").
std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const EnvConfig& env,
                                    std::uint64_t seed);

struct TrialRow {
  int round = 0;
  int arm = 0;
  double frequency_hz = 0.0;
  double reward = 0.0;
  double mean_beta = 0.0;
  double error_index = 0.0;
  bool explored = false;
  double wall_seconds = 0.0;  // not part of the deterministic export
};

struct TrialFailure {
  int round = 0;
  std::string kind;
  std::string message;
};

struct TrialRecord {
  std::string policy;
  std::uint64_t seed = 0;
  int delay = 1;
  std::vector<TrialRow> rows;
  PolicyCounters counters;
  double total_wall_seconds = 0.0;
  std::optional<TrialFailure> failure;
  nlohmann::json final_state;  // policy snapshot after the last update
};

TrialRecord run_trial(const RunConfig& config, std::uint64_t seed);
// Same loop with a caller-supplied policy (and optionally a healthy-brain
// environment whose latent target ignores the arm).
TrialRecord run_trial(const RunConfig& config, std::uint64_t seed, Policy& policy,
                      bool healthy_brain = false);

// r(t) = sum_{i <= t} EI_i.
std::vector<double> cumulative_regret(const TrialRecord& record);
std::vector<double> cumulative_reward(const TrialRecord& record);

enum class SweepAxis { kPenalty, kEpsilon, kAlgorithm, kDelay };
SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

// Applies one sweep value to a copy of the config. Algorithm values are a
// policy name optionally followed by ":<number>" (epsilon for eps_neural_ts,
// frequency in Hz for periodic).
RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, const std::string& value);

struct CellSummary {
  std::string value;
  int trials_ok = 0;
  double final_regret_mean = 0.0;
  double final_regret_se = 0.0;
  double total_reward_mean = 0.0;
  double total_reward_se = 0.0;
  double avg_arm_after_threshold_mean = 0.0;
  double avg_arm_after_threshold_se = 0.0;
  double mean_beta_after_threshold = 0.0;
  double error_index_after_threshold = 0.0;
  double explore_rounds_mean = 0.0;
  std::optional<double> reference_avg_arm;  // published BGM value, penalty axis only
  std::optional<std::string> error;
};

struct CurvePoint {
  int round = 0;
  double reward_mean = 0.0;
  double reward_se = 0.0;
  double regret_mean = 0.0;
  double regret_se = 0.0;
};

struct SweepCell {
  std::string value;
  std::vector<TrialRecord> trials;  // ordered like config.seeds
  std::optional<std::string> error;
  CellSummary summary;
  std::vector<CurvePoint> curve;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kEpsilon;
  std::vector<SweepCell> cells;  // ordered like `values`
};

// Runs every value x seed (in parallel when hardware allows; results are keyed
// by position so the output does not depend on scheduling).
SweepResult sweep(const RunConfig& config, SweepAxis axis, const std::vector<std::string>& values);

CellSummary summarize_cell(const std::string& value, const std::vector<TrialRecord>& trials,
                           int threshold_round);
std::vector<CurvePoint> mean_curves(const std::vector<TrialRecord>& trials);

std::optional<double> published_average_arm(double penalty);

struct BenchRow {
  std::string label;
  double median_wall_seconds = 0.0;
  double variance_evaluations_mean = 0.0;
  double fit_calls_mean = 0.0;
  double explore_rounds_mean = 0.0;
  std::vector<long> variance_evaluations;  // per seed
  std::vector<long> explore_rounds;        // per seed
  std::vector<double> wall_seconds;        // per seed
};

// Runs each policy spec (algorithm-axis syntax) serially per seed and reports
// median wall time plus deterministic work counts.
std::vector<BenchRow> bench_runtime(const RunConfig& config, const std::vector<std::string>& policies);

// Runs `count` independent jobs over a worker pool.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job);

}  // namespace adbs
