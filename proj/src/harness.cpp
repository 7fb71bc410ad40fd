#include "adbs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "adbs/error.hpp"
#include "adbs/linear_policies.hpp"

namespace adbs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  if (rounds < 1) throw InvalidInput("rounds must be >= 1");
  if (seeds.empty()) throw InvalidInput("at least one seed is required");
  if (delay < 1) throw InvalidInput("delay batch size must be >= 1");
  if (threshold_round < 0 || threshold_round >= rounds) {
    throw InvalidInput("threshold_round must lie in [0, rounds)");
  }
  if (format != "csv" && format != "jsonl") throw InvalidInput("format must be csv or jsonl");
  const auto& p = policy;
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
  if (!(p.nu > 0.0)) throw InvalidInput("nu must be > 0");
  if (!(p.lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  if (p.steps < 1) throw InvalidInput("steps must be >= 1");
  if (!(p.learning_rate > 0.0)) throw InvalidInput("learning_rate must be > 0");
  if (!(p.greedy_c >= 0.0)) throw InvalidInput("greedy_c must be >= 0");
  if (!(p.alpha >= 0.0)) throw InvalidInput("alpha must be >= 0");
  if (p.width < 1 || p.depth < 2) throw InvalidInput("network needs width >= 1, depth >= 2");
  // Constructing the policy checks the name and the remaining fields.
  (void)make_policy(p, env, 0);
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& p, const EnvConfig& env,
                                    std::uint64_t seed) {
  const int arms = env.arms.arm_count;
  const int dim = arms * env.context_length();
  NeuralHyper nh;
  nh.lambda = p.lambda;
  nh.nu = p.nu;
  nh.epsilon = p.epsilon;
  nh.fit = FitOptions{p.lambda, p.steps, p.learning_rate};
  nh.covariance = p.covariance;
  nh.per_arm_coin = p.per_arm_coin;
  const NetShape shape{dim, p.width, p.depth};
  LinearHyper lh;
  lh.lambda = p.lambda;
  lh.alpha = p.alpha;
  lh.nu = p.nu;

  if (p.name == "eps_neural_ts") {
    return std::make_unique<NeuralPolicy>(NeuralKind::kEpsNeuralTs, shape, nh, seed);
  }
  if (p.name == "neural_ts") {
    return std::make_unique<NeuralPolicy>(NeuralKind::kNeuralTs, shape, nh, seed);
  }
  if (p.name == "neural_ucb") {
    return std::make_unique<NeuralPolicy>(NeuralKind::kNeuralUcb, shape, nh, seed);
  }
  if (p.name == "neural_eps_greedy") {
    return std::make_unique<NeuralPolicy>(NeuralKind::kNeuralEpsGreedy, shape, nh, seed,
                                          p.greedy_c);
  }
  if (p.name == "lin_ucb") return std::make_unique<LinearPolicy>(LinearFlavor::kLinUcb, dim, lh, seed);
  if (p.name == "lin_ts") return std::make_unique<LinearPolicy>(LinearFlavor::kLinTs, dim, lh, seed);
  if (p.name == "ucb_glm") return std::make_unique<LinearPolicy>(LinearFlavor::kUcbGlm, dim, lh, seed);
  if (p.name == "ucb1") return std::make_unique<Ucb1Policy>(arms, p.ucb1_delta);
  if (p.name == "periodic") return periodic_controller(p.frequency_hz, env.arms);
  throw InvalidInput("unknown policy '" + p.name + "'");
}

TrialRecord run_trial(const RunConfig& config, std::uint64_t seed) {
  auto policy = make_policy(config.policy, config.env, seed);
  return run_trial(config, seed, *policy);
}

TrialRecord run_trial(const RunConfig& config, std::uint64_t seed, Policy& policy,
                      bool healthy_brain) {
  TrialRecord record;
  record.policy = policy.name();
  record.seed = seed;
  record.delay = config.delay;
  record.rows.reserve(static_cast<std::size_t>(config.rounds));

  const auto trial_start = Clock::now();
  EnvState env = make_env_state(config.env, seed, healthy_brain);
  DelayedRewardBuffer buffer(config.delay);
  ContextFeature context = observe_context(env);
  const int arms = config.env.arms.arm_count;

  int round = 1;
  try {
    for (; round <= config.rounds; ++round) {
      const auto round_start = Clock::now();
      const ArmContexts contexts = config.policy.unit_norm_contexts
                                       ? unit_normalized(embed_context(context, arms))
                                       : embed_context(context, arms);
      const Decision decision = policy.select(contexts, round);
      EnvObservation obs = env_step(env, decision.arm);
      auto batch = buffer.push(Sample{decision.arm, contexts[static_cast<std::size_t>(decision.arm)],
                                      obs.reward});
      if (batch) policy.update(*batch);

      TrialRow row;
      row.round = round;
      row.arm = decision.arm;
      row.frequency_hz = obs.frequency_hz;
      row.reward = obs.reward;
      row.mean_beta = obs.mean_beta;
      row.error_index = obs.error_index;
      row.explored = decision.explored;
      row.wall_seconds = seconds_since(round_start);
      record.rows.push_back(row);
      context = std::move(obs.context);
    }
    if (auto rest = buffer.flush()) policy.update(*rest);
  } catch (const Error& e) {
    record.failure = TrialFailure{round, e.kind(), e.what()};
  } catch (const std::exception& e) {
    record.failure = TrialFailure{round, "error", e.what()};
  }
  record.counters = policy.counters();
  record.final_state = policy.snapshot();
  record.total_wall_seconds = seconds_since(trial_start);
  return record;
}

std::vector<double> cumulative_regret(const TrialRecord& record) {
  std::vector<double> out;
  out.reserve(record.rows.size());
  double total = 0.0;
  for (const auto& row : record.rows) {
    total += row.error_index;
    out.push_back(total);
  }
  return out;
}

std::vector<double> cumulative_reward(const TrialRecord& record) {
  std::vector<double> out;
  out.reserve(record.rows.size());
  double total = 0.0;
  for (const auto& row : record.rows) {
    total += row.reward;
    out.push_back(total);
  }
  return out;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "penalty") return SweepAxis::kPenalty;
  if (s == "epsilon") return SweepAxis::kEpsilon;
  if (s == "algorithm") return SweepAxis::kAlgorithm;
  if (s == "delay") return SweepAxis::kDelay;
  throw InvalidInput("unknown sweep axis '" + s + "' (penalty|epsilon|algorithm|delay)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kPenalty: return "penalty";
    case SweepAxis::kEpsilon: return "epsilon";
    case SweepAxis::kAlgorithm: return "algorithm";
    case SweepAxis::kDelay: return "delay";
  }
  return "unknown";
}

namespace {

double parse_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw InvalidInput(std::string("bad ") + what + " value '" + s + "'");
  }
  return v;
}

}  // namespace

RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, const std::string& value) {
  RunConfig c = base;
  switch (axis) {
    case SweepAxis::kPenalty: c.env.penalty_coefficient = parse_number(value, "penalty"); break;
    case SweepAxis::kEpsilon: c.policy.epsilon = parse_number(value, "epsilon"); break;
    case SweepAxis::kDelay: {
      const double b = parse_number(value, "delay");
      if (b != std::floor(b) || b < 1) throw InvalidInput("delay must be a positive integer");
      c.delay = static_cast<int>(b);
      break;
    }
    case SweepAxis::kAlgorithm: {
      const auto colon = value.find(':');
      c.policy.name = value.substr(0, colon);
      if (colon != std::string::npos) {
        const double arg = parse_number(value.substr(colon + 1), "algorithm parameter");
        if (c.policy.name == "eps_neural_ts") {
          c.policy.epsilon = arg;
        } else if (c.policy.name == "periodic") {
          c.policy.frequency_hz = arg;
        } else {
          throw InvalidInput("policy '" + c.policy.name + "' takes no parameter");
        }
      }
      break;
    }
  }
  return c;
}

std::optional<double> published_average_arm(double penalty) {
  static constexpr std::pair<double, double> kTable[] = {
      {0.08, 8.6}, {0.10, 8.1}, {0.14, 8.0}, {0.20, 9.0},
      {0.25, 8.9}, {0.30, 7.9}, {0.33, 4.1}, {0.50, 0.6}};
  for (const auto& [c, arm] : kTable) {
    if (std::abs(c - penalty) < 1e-9) return arm;
  }
  return std::nullopt;
}

CellSummary summarize_cell(const std::string& value, const std::vector<TrialRecord>& trials,
                           int threshold_round) {
  CellSummary s;
  s.value = value;
  std::vector<double> regret, reward, avg_arm, beta, ei, explore;
  for (const auto& t : trials) {
    if (t.failure || t.rows.empty()) continue;
    ++s.trials_ok;
    regret.push_back(cumulative_regret(t).back());
    reward.push_back(cumulative_reward(t).back());
    double arm_sum = 0.0, beta_sum = 0.0, ei_sum = 0.0;
    int n = 0;
    for (const auto& row : t.rows) {
      if (row.round <= threshold_round) continue;
      arm_sum += row.arm;
      beta_sum += row.mean_beta;
      ei_sum += row.error_index;
      ++n;
    }
    if (n > 0) {
      avg_arm.push_back(arm_sum / n);
      beta.push_back(beta_sum / n);
      ei.push_back(ei_sum / n);
    }
    explore.push_back(static_cast<double>(t.counters.explore_rounds));
  }
  s.final_regret_mean = mean_of(regret);
  s.final_regret_se = standard_error(regret);
  s.total_reward_mean = mean_of(reward);
  s.total_reward_se = standard_error(reward);
  s.avg_arm_after_threshold_mean = mean_of(avg_arm);
  s.avg_arm_after_threshold_se = standard_error(avg_arm);
  s.mean_beta_after_threshold = mean_of(beta);
  s.error_index_after_threshold = mean_of(ei);
  s.explore_rounds_mean = mean_of(explore);
  return s;
}

std::vector<CurvePoint> mean_curves(const std::vector<TrialRecord>& trials) {
  std::vector<std::vector<double>> regrets, rewards;
  std::size_t rounds = 0;
  for (const auto& t : trials) {
    if (t.failure) continue;
    regrets.push_back(cumulative_regret(t));
    std::vector<double> r;
    for (const auto& row : t.rows) r.push_back(row.reward);
    rewards.push_back(std::move(r));
    rounds = std::max(rounds, t.rows.size());
  }
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < rounds; ++i) {
    std::vector<double> reg, rew;
    for (std::size_t s = 0; s < regrets.size(); ++s) {
      if (i < regrets[s].size()) {
        reg.push_back(regrets[s][i]);
        rew.push_back(rewards[s][i]);
      }
    }
    out.push_back({static_cast<int>(i + 1), mean_of(rew), standard_error(rew), mean_of(reg),
                   standard_error(reg)});
  }
  return out;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
}

SweepResult sweep(const RunConfig& config, SweepAxis axis, const std::vector<std::string>& values) {
  if (values.empty()) throw InvalidInput("sweep: no values");
  if (config.seeds.empty()) throw InvalidInput("sweep: no seeds");
  SweepResult result;
  result.axis = axis;
  result.cells.resize(values.size());

  std::vector<std::optional<RunConfig>> cell_configs(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) {
    result.cells[v].value = values[v];
    try {
      RunConfig c = apply_sweep_value(config, axis, values[v]);
      c.validate();
      cell_configs[v] = std::move(c);
    } catch (const Error& e) {
      result.cells[v].error = e.what();
    }
    result.cells[v].trials.resize(config.seeds.size());
  }

  const std::size_t n_seeds = config.seeds.size();
  parallel_for(values.size() * n_seeds, [&](std::size_t job) {
    const std::size_t v = job / n_seeds;
    const std::size_t s = job % n_seeds;
    if (!cell_configs[v]) return;
    result.cells[v].trials[s] = run_trial(*cell_configs[v], config.seeds[s]);
  });

  for (std::size_t v = 0; v < values.size(); ++v) {
    auto& cell = result.cells[v];
    if (!cell.error) {
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const auto& t = cell.trials[s];
        if (t.failure && !cell.error) {
          cell.error = "seed " + std::to_string(t.seed) + " failed at round " +
                       std::to_string(t.failure->round) + ": " + t.failure->message;
        }
      }
    }
    cell.summary = summarize_cell(cell.value, cell.trials, config.threshold_round);
    cell.summary.error = cell.error;
    if (axis == SweepAxis::kPenalty && cell_configs[v]) {
      cell.summary.reference_avg_arm = published_average_arm(cell_configs[v]->env.penalty_coefficient);
    }
    cell.curve = mean_curves(cell.trials);
  }
  return result;
}

std::vector<BenchRow> bench_runtime(const RunConfig& config,
                                    const std::vector<std::string>& policies) {
  if (config.seeds.size() < 3) throw InvalidInput("bench: at least 3 seeds are required");
  std::vector<BenchRow> rows;
  for (const auto& spec : policies) {
    RunConfig c = apply_sweep_value(config, SweepAxis::kAlgorithm, spec);
    c.validate();
    BenchRow row;
    row.label = spec;
    std::vector<double> fits;
    for (auto seed : c.seeds) {
      const TrialRecord t = run_trial(c, seed);
      if (t.failure) {
        throw Error("bench: " + spec + " seed " + std::to_string(seed) + " failed: " +
                    t.failure->message);
      }
      row.wall_seconds.push_back(t.total_wall_seconds);
      row.variance_evaluations.push_back(t.counters.variance_evaluations);
      row.explore_rounds.push_back(t.counters.explore_rounds);
      fits.push_back(static_cast<double>(t.counters.fit_calls));
    }
    std::vector<double> sorted = row.wall_seconds;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    row.median_wall_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<double> ve(row.variance_evaluations.begin(), row.variance_evaluations.end());
    std::vector<double> ex(row.explore_rounds.begin(), row.explore_rounds.end());
    row.variance_evaluations_mean = mean_of(ve);
    row.explore_rounds_mean = mean_of(ex);
    row.fit_calls_mean = mean_of(fits);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace adbs
