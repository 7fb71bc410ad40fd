#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adbs/linear_policies.hpp"
#include "adbs/policy.hpp"
#include "adbs/rng.hpp"
#include "adbs/signal.hpp"

namespace adbs {

// K = 13 arms at F = 15 k Hz, k = 0 (off) .. 12 (180 Hz).
struct ArmSpace {
  int arm_count = 13;
  double frequency_step = 15.0;
  double max_frequency() const { return frequency_step * (arm_count - 1); }
};

double map_arm_to_frequency(int arm, const ArmSpace& space = {});

struct PulseTrain {
  std::vector<std::uint8_t> flags;  // one entry per sample
  double window_seconds = 0.0;
  int pulse_count() const;
};

// round(F * T_w) pulses at sample indices floor(i * sample_rate / F).
PulseTrain build_pulse_train(double frequency_hz, double window_seconds, double sample_rate);

enum class EiNoiseModel {
  kAdditive,  // zeta ~ N(0, ei_noise^2)
  kBinomial,  // zeta ~ N(0, ei_noise^2 * mu (1 - mu)), mu the noise-free EI
};

struct EnvConfig {
  double kappa = 0.6;             // latent relaxation per window, (0, 1]
  double f_half = 72.0;           // half-suppression frequency, Hz
  double hill_exponent = 12.0;    // steepness of the frequency response
  double b_healthy = 0.05;
  double b_pd = 1.0;
  double initial_beta = 1.0;      // latent at the start of a trial
  double noise_sigma_latent = 0.03;
  double noise_sigma_obs = 0.1;
  double ei_floor = 0.03;
  double ei_slope = 0.5;
  double ei_noise = 0.21;
  EiNoiseModel ei_noise_model = EiNoiseModel::kBinomial;
  double sample_rate = 1000.0;    // Hz
  double penalty_coefficient = 0.14;
  double beta_weight = 8.0;       // weight of mean beta in the reward
  double oscillation_hz = 20.0;   // pathological rhythm frequency
  double window_seconds = 2.0;    // T_w
  double sample_interval = 0.1;   // m
  ArmSpace arms{};

  void validate() const;
  int context_length() const;
};

struct EnvState {
  double beta_level = 1.0;  // latent b_t in [0, 1]
  double sim_time = 0.0;    // seconds
  long steps = 0;
  bool healthy_brain = false;  // latent target pinned at b_healthy
  Rng latent_rng;
  Rng obs_rng;
  Rng ei_rng;
  EnvConfig config;
  double reference_power = 1.0;  // expected raw beta power of the untreated state
};

struct EnvObservation {
  int arm = 0;
  double frequency_hz = 0.0;
  int pulse_count = 0;
  ContextFeature context;  // s_{t+1}
  double mean_beta = 0.0;  // mean of s_{t+1}
  double error_index = 0.0;  // evaluation oracle only
  double reward = 0.0;
};

// F / (F + f_half) for hill_exponent = 1; F^n / (F^n + f_half^n) in general.
double suppression(double frequency_hz, const EnvConfig& config);
double latent_target(double frequency_hz, const EnvConfig& config);
// Expected raw (un-normalized) beta-band power of one sub-window at latent b.
double expected_beta_power(double beta_level, const EnvConfig& config);
double expected_error_index(double beta_level, const EnvConfig& config);
// R = -w * mean_beta - C * k; w = 1 is the plain reward.
double compute_reward(double mean_beta, int arm, double penalty_coefficient,
                      double beta_weight = 1.0);

EnvState make_env_state(const EnvConfig& config, std::uint64_t seed, bool healthy_brain = false);

// Emits one T_w window of synthetic LFP at the current latent and returns the
// normalized beta-power context. Advances the observation stream.
ContextFeature observe_context(EnvState& state);

// One decision window under arm k: latent update, next-window context, EI
// oracle and reward.
EnvObservation env_step(EnvState& state, int arm);

// clamp(ei_floor + ei_slope * b + zeta, 0, 1) at the current latent.
double error_index_oracle(EnvState& state);

struct CalibrationResult {
  double pearson_r = 0.0;
  std::vector<double> mean_beta;
  std::vector<double> error_index;
};

// N episodes, each a fresh environment driven by `steps_per_episode`
// uniformly random arms; the last (mean beta, EI) pair of each is kept.
CalibrationResult calibrate_correlation(const EnvConfig& config, int episodes,
                                        std::uint64_t seed, int steps_per_episode = 5);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

enum class CalibrationKnob { kEiNoise, kObservationNoise };

struct TuningResult {
  EnvConfig config;
  double knob_value = 0.0;
  double pearson_r = 0.0;
  int iterations = 0;
};

// Bisection on one noise constant until the correlation reaches `target`.
TuningResult tune_correlation(const EnvConfig& config, double target, CalibrationKnob knob,
                              int episodes, std::uint64_t seed, double tolerance = 0.005);

// Fixed-frequency (cDBS) controller; F must be a multiple of the arm step.
std::unique_ptr<PeriodicPolicy> periodic_controller(double frequency_hz,
                                                    const ArmSpace& space = {});

// Withholds samples and releases them in order every batch_size pushes.
class DelayedRewardBuffer {
 public:
  explicit DelayedRewardBuffer(int batch_size);
  // Returns a batch when batch_size samples have accumulated.
  std::optional<std::vector<Sample>> push(Sample sample);
  std::optional<std::vector<Sample>> flush();
  int batch_size() const { return batch_size_; }
  std::size_t pending() const { return pending_.size(); }

 private:
  int batch_size_;
  std::vector<Sample> pending_;
};

std::string to_string(EiNoiseModel model);
EiNoiseModel ei_noise_model_from_string(const std::string& s);

}  // namespace adbs
