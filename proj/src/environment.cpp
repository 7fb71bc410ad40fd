#include "adbs/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adbs/error.hpp"

namespace adbs {

double map_arm_to_frequency(int arm, const ArmSpace& space) {
  if (arm < 0 || arm >= space.arm_count) {
    throw InvalidInput("arm " + std::to_string(arm) + " outside [0, " +
                       std::to_string(space.arm_count - 1) + "]");
  }
  return space.frequency_step * arm;
}

int PulseTrain::pulse_count() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

PulseTrain build_pulse_train(double frequency_hz, double window_seconds, double sample_rate) {
  if (!(frequency_hz >= 0.0)) throw InvalidInput("pulse train: frequency must be >= 0");
  if (!(window_seconds > 0.0)) throw InvalidInput("pulse train: window must be > 0");
  if (!(sample_rate > 0.0)) throw InvalidInput("pulse train: sample rate must be > 0");
  const auto samples = static_cast<std::size_t>(std::lround(window_seconds * sample_rate));
  const auto pulses = static_cast<std::size_t>(std::lround(frequency_hz * window_seconds));
  if (pulses > samples) {
    throw InvalidInput("pulse train: more pulses than samples in the window");
  }
  PulseTrain train;
  train.window_seconds = window_seconds;
  train.flags.assign(samples, 0);
  for (std::size_t i = 0; i < pulses; ++i) {
    const auto idx = static_cast<std::size_t>(
        std::floor(static_cast<double>(i) * sample_rate / frequency_hz));
    train.flags[std::min(idx, samples - 1)] = 1;
  }
  return train;
}

int EnvConfig::context_length() const {
  return adbs::context_length(window_seconds, sample_interval);
}

void EnvConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("environment config: ") + what);
  };
  require(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0, 1]");
  require(f_half > 0.0, "f_half must be > 0");
  require(hill_exponent > 0.0, "hill_exponent must be > 0");
  require(b_healthy >= 0.0 && b_healthy <= 1.0, "b_healthy must lie in [0, 1]");
  require(b_pd >= 0.0 && b_pd <= 1.0, "b_pd must lie in [0, 1]");
  require(b_healthy < b_pd, "b_healthy must be below b_pd");
  require(initial_beta >= 0.0 && initial_beta <= 1.0, "initial_beta must lie in [0, 1]");
  require(noise_sigma_latent >= 0.0, "noise_sigma_latent must be >= 0");
  require(noise_sigma_obs >= 0.0, "noise_sigma_obs must be >= 0");
  require(ei_noise >= 0.0, "ei_noise must be >= 0");
  require(ei_floor >= 0.0 && ei_floor <= 1.0, "ei_floor must lie in [0, 1]");
  require(ei_slope >= 0.0, "ei_slope must be >= 0");
  require(sample_rate > 0.0, "sample_rate must be > 0");
  require(beta_weight > 0.0, "beta_weight must be > 0");
  require(oscillation_hz > kBetaLowHz && oscillation_hz < kBetaHighHz,
          "oscillation_hz must lie inside the beta band");
  require(arms.arm_count >= 1 && arms.frequency_step > 0.0, "arm space invalid");
  require(2.0 * arms.max_frequency() < sample_rate, "sample rate too low for the arm space");
  const int l = context_length();
  const long sub = std::lround(sample_interval * sample_rate);
  require(sub >= 2, "sample_interval too short for the sample rate");
  require(static_cast<long>(l) * sub <= std::lround(window_seconds * sample_rate),
          "context sub-windows exceed the decision window");
  require(sample_rate / 2.0 >= kBetaHighHz, "sample rate too low for the beta band");
}

double suppression(double frequency_hz, const EnvConfig& c) {
  if (frequency_hz <= 0.0) return 0.0;
  const double a = std::pow(frequency_hz, c.hill_exponent);
  return a / (a + std::pow(c.f_half, c.hill_exponent));
}

double latent_target(double frequency_hz, const EnvConfig& c) {
  return c.b_healthy + (c.b_pd - c.b_healthy) * (1.0 - suppression(frequency_hz, c));
}

namespace {

long sub_window_samples(const EnvConfig& c) { return std::lround(c.sample_interval * c.sample_rate); }

// Beta-band power of a unit-latent tone over one sub-window, plus the band
// count used for the white-noise floor.
struct BandGeometry {
  double unit_tone_power = 0.0;
  double noise_floor_per_variance = 0.0;
};

BandGeometry band_geometry(const EnvConfig& c) {
  const long n = sub_window_samples(c);
  SampledSignal tone;
  tone.sample_rate = c.sample_rate;
  tone.samples.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    tone.samples[static_cast<std::size_t>(i)] =
        std::sin(2.0 * std::numbers::pi * c.oscillation_hz * static_cast<double>(i) / c.sample_rate);
  }
  const PsdEstimate psd = estimate_psd(tone, Taper::kHann);
  BandGeometry g;
  g.unit_tone_power = band_power(psd, kBetaLowHz, kBetaHighHz).power;
  // White noise of unit variance has expected one-sided density 2 / fs on
  // interior bins.
  const double df = psd.bin_width();
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f < kBetaLowHz || f > kBetaHighHz) continue;
    const bool edge = k == 0 || (n % 2 == 0 && k == psd.frequencies.size() - 1);
    g.noise_floor_per_variance += (edge ? 1.0 : 2.0) / c.sample_rate * df;
  }
  return g;
}

}  // namespace

double expected_beta_power(double beta_level, const EnvConfig& c) {
  const BandGeometry g = band_geometry(c);
  return beta_level * g.unit_tone_power +
         c.noise_sigma_obs * c.noise_sigma_obs * g.noise_floor_per_variance;
}

double expected_error_index(double beta_level, const EnvConfig& c) {
  return std::clamp(c.ei_floor + c.ei_slope * beta_level, 0.0, 1.0);
}

double compute_reward(double mean_beta, int arm, double penalty_coefficient, double beta_weight) {
  return -beta_weight * mean_beta - penalty_coefficient * static_cast<double>(arm);
}

EnvState make_env_state(const EnvConfig& config, std::uint64_t seed, bool healthy_brain) {
  config.validate();
  EnvState s;
  s.config = config;
  s.healthy_brain = healthy_brain;
  s.beta_level = healthy_brain ? config.b_healthy : config.initial_beta;
  s.latent_rng = Rng(derive_seed(seed, stream::kLatent));
  s.obs_rng = Rng(derive_seed(seed, stream::kObservation));
  s.ei_rng = Rng(derive_seed(seed, stream::kErrorIndex));
  s.reference_power = expected_beta_power(config.b_pd, config);
  return s;
}

ContextFeature observe_context(EnvState& state) {
  const EnvConfig& c = state.config;
  const int l = c.context_length();
  const long sub = sub_window_samples(c);
  const double amplitude = std::sqrt(std::max(state.beta_level, 0.0));
  const double phase = 2.0 * std::numbers::pi * state.obs_rng.uniform();

  std::vector<double> stream(static_cast<std::size_t>(l));
  SampledSignal piece;
  piece.sample_rate = c.sample_rate;
  piece.samples.resize(static_cast<std::size_t>(sub));
  for (int j = 0; j < l; ++j) {
    for (long i = 0; i < sub; ++i) {
      const double t = static_cast<double>(j * sub + i) / c.sample_rate;
      piece.samples[static_cast<std::size_t>(i)] =
          amplitude * std::sin(2.0 * std::numbers::pi * c.oscillation_hz * t + phase) +
          c.noise_sigma_obs * state.obs_rng.normal();
    }
    const double raw = band_power(estimate_psd(piece, Taper::kHann), kBetaLowHz, kBetaHighHz).power;
    stream[static_cast<std::size_t>(j)] = raw / state.reference_power;
  }
  return build_context_window(stream, 0, c.window_seconds, c.sample_interval, c.sample_interval);
}

double error_index_oracle(EnvState& state) {
  const EnvConfig& c = state.config;
  const double mu = std::clamp(c.ei_floor + c.ei_slope * state.beta_level, 0.0, 1.0);
  double sd = c.ei_noise;
  if (c.ei_noise_model == EiNoiseModel::kBinomial) sd *= std::sqrt(mu * (1.0 - mu));
  const double zeta = sd > 0.0 ? sd * state.ei_rng.normal() : 0.0;
  return std::clamp(mu + zeta, 0.0, 1.0);
}

EnvObservation env_step(EnvState& state, int arm) {
  const EnvConfig& c = state.config;
  EnvObservation obs;
  obs.arm = arm;
  obs.frequency_hz = map_arm_to_frequency(arm, c.arms);
  obs.pulse_count =
      build_pulse_train(obs.frequency_hz, c.window_seconds, c.sample_rate).pulse_count();

  const double target = state.healthy_brain ? c.b_healthy : latent_target(obs.frequency_hz, c);
  const double eta = c.noise_sigma_latent > 0.0 ? c.noise_sigma_latent * state.latent_rng.normal() : 0.0;
  state.beta_level =
      std::clamp(state.beta_level + c.kappa * (target - state.beta_level) + eta, 0.0, 1.0);
  state.sim_time += c.window_seconds;
  ++state.steps;

  obs.context = observe_context(state);
  obs.mean_beta = obs.context.mean();
  obs.error_index = error_index_oracle(state);
  obs.reward = compute_reward(obs.mean_beta, arm, c.penalty_coefficient, c.beta_weight);
  return obs;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("pearson: need paired samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw UndefinedCorrelation("pearson: a sample has zero variance");
  }
  return sab / std::sqrt(saa * sbb);
}

CalibrationResult calibrate_correlation(const EnvConfig& config, int episodes,
                                        std::uint64_t seed, int steps_per_episode) {
  if (episodes < 30) throw InvalidInput("calibrate_correlation: need at least 30 episodes");
  if (steps_per_episode < 1) throw InvalidInput("calibrate_correlation: steps must be >= 1");
  Rng arm_rng(derive_seed(seed, stream::kCalibration));
  CalibrationResult out;
  out.mean_beta.reserve(static_cast<std::size_t>(episodes));
  out.error_index.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    EnvState env = make_env_state(config, derive_seed(seed, 1000 + static_cast<std::uint64_t>(e)));
    EnvObservation obs;
    for (int s = 0; s < steps_per_episode; ++s) {
      obs = env_step(env, arm_rng.uniform_index(config.arms.arm_count));
    }
    out.mean_beta.push_back(obs.mean_beta);
    out.error_index.push_back(obs.error_index);
  }
  out.pearson_r = pearson(out.mean_beta, out.error_index);
  return out;
}

TuningResult tune_correlation(const EnvConfig& config, double target, CalibrationKnob knob,
                              int episodes, std::uint64_t seed, double tolerance) {
  if (!(target > 0.0 && target < 1.0)) throw InvalidInput("tuning target must lie in (0, 1)");
  auto with_value = [&](double v) {
    EnvConfig c = config;
    (knob == CalibrationKnob::kEiNoise ? c.ei_noise : c.noise_sigma_obs) = v;
    return c;
  };
  auto r_at = [&](double v) { return calibrate_correlation(with_value(v), episodes, seed).pearson_r; };

  // Correlation falls as either noise grows; grow the upper bracket first.
  double lo = 0.0;
  double hi = knob == CalibrationKnob::kEiNoise ? 0.5 : 1.0;
  int iterations = 0;
  while (r_at(hi) > target && iterations < 20) {
    lo = hi;
    hi *= 2.0;
    ++iterations;
  }
  TuningResult best{with_value(hi), hi, r_at(hi), iterations};
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = r_at(mid);
    ++best.iterations;
    if (std::abs(r - target) < std::abs(best.pearson_r - target)) {
      best.config = with_value(mid);
      best.knob_value = mid;
      best.pearson_r = r;
    }
    if (std::abs(r - target) <= tolerance) break;
    (r > target ? lo : hi) = mid;
  }
  return best;
}

std::unique_ptr<PeriodicPolicy> periodic_controller(double frequency_hz, const ArmSpace& space) {
  const double k = frequency_hz / space.frequency_step;
  const double rounded = std::round(k);
  if (std::abs(k - rounded) > 1e-9 || rounded < 0 || rounded > space.arm_count - 1) {
    throw InvalidInput("periodic controller: frequency must be a multiple of " +
                       std::to_string(space.frequency_step) + " Hz within the arm space");
  }
  return std::make_unique<PeriodicPolicy>(static_cast<int>(rounded));
}

DelayedRewardBuffer::DelayedRewardBuffer(int batch_size) : batch_size_(batch_size) {
  if (batch_size < 1) throw InvalidInput("delay batch size must be >= 1");
}

std::optional<std::vector<Sample>> DelayedRewardBuffer::push(Sample sample) {
  pending_.push_back(std::move(sample));
  if (static_cast<int>(pending_.size()) < batch_size_) return std::nullopt;
  return flush();
}

std::optional<std::vector<Sample>> DelayedRewardBuffer::flush() {
  if (pending_.empty()) return std::nullopt;
  std::vector<Sample> out;
  out.swap(pending_);
  return out;
}

std::string to_string(EiNoiseModel model) {
  return model == EiNoiseModel::kAdditive ? "additive" : "binomial";
}

EiNoiseModel ei_noise_model_from_string(const std::string& s) {
  if (s == "additive") return EiNoiseModel::kAdditive;
  if (s == "binomial") return EiNoiseModel::kBinomial;
  throw InvalidInput("unknown ei_noise_model '" + s + "'");
}

}  // namespace adbs
