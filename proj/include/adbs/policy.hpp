#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adbs/signal.hpp"

namespace adbs {

// One observed (context of the pulled arm, reward) pair.
struct Sample {
  int arm = 0;
  Eigen::VectorXd context;
  double reward = 0.0;
};

struct Decision {
  int arm = 0;
  bool explored = false;  // explore branch taken this round
};

// Deterministic work counters; wall time is measured by the harness.
struct PolicyCounters {
  long variance_evaluations = 0;  // posterior-variance (neural tangent) evaluations
  long fit_calls = 0;             // gradient-descent solves of the regularized loss
  long update_batches = 0;
  long samples_seen = 0;
  long explore_rounds = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // round is 1-based.
  virtual Decision select(const ArmContexts& contexts, int round) = 0;
  virtual void update(std::span<const Sample> batch) = 0;
  virtual nlohmann::json snapshot() const { return nlohmann::json::object(); }

  const PolicyCounters& counters() const { return counters_; }

 protected:
  PolicyCounters counters_;
};

// argmax with ties broken toward the lowest index; throws on non-finite input.
int select_arm(std::span<const double> scores);

}  // namespace adbs
