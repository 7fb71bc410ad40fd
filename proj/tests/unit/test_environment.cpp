#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "adbs/environment.hpp"
#include "adbs/error.hpp"

using namespace adbs;

namespace {

EnvConfig quiet() {
  EnvConfig c;
  c.noise_sigma_latent = 0.0;
  c.noise_sigma_obs = 0.0;
  c.ei_noise = 0.0;
  return c;
}

}  // namespace

TEST_CASE("arm to frequency map") {
  CHECK(map_arm_to_frequency(0) == 0.0);
  CHECK(map_arm_to_frequency(6) == 90.0);
  CHECK(map_arm_to_frequency(12) == 180.0);
  CHECK_THROWS_AS(map_arm_to_frequency(13), InvalidInput);
  CHECK_THROWS_AS(map_arm_to_frequency(-1), InvalidInput);
}

TEST_CASE("pulse trains") {
  const auto off = build_pulse_train(0.0, 2.0, 1000.0);
  CHECK(off.flags.size() == 2000);
  CHECK(off.pulse_count() == 0);

  const auto fast = build_pulse_train(180.0, 2.0, 1000.0);
  CHECK(fast.pulse_count() == 360);
  std::vector<int> idx;
  for (int i = 0; i < 2000; ++i) {
    if (fast.flags[i]) idx.push_back(i);
  }
  CHECK(idx.front() == 0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    CHECK(idx[i] == static_cast<int>(std::floor(i * 1000.0 / 180.0)));
  }
  for (std::size_t i = 1; i < idx.size(); ++i) {
    const int gap = idx[i] - idx[i - 1];
    CHECK((gap == 5 || gap == 6));
  }
  CHECK(build_pulse_train(90.0, 2.0, 1000.0).pulse_count() == 180);
  for (int k = 0; k < 13; ++k) {
    const double f = map_arm_to_frequency(k);
    CHECK(build_pulse_train(f, 2.0, 1000.0).pulse_count() == std::lround(f * 2.0));
  }
  CHECK_THROWS_AS(build_pulse_train(1500.0, 2.0, 1000.0), InvalidInput);
  CHECK_THROWS_AS(build_pulse_train(-1.0, 2.0, 1000.0), InvalidInput);
}

TEST_CASE("latent update in closed form") {
  EnvConfig c = quiet();
  c.kappa = 1.0;
  c.f_half = 45.0;
  c.hill_exponent = 1.0;
  EnvState s = make_env_state(c, 0);
  env_step(s, 12);
  CHECK(s.beta_level ==
        doctest::Approx(c.b_healthy + (c.b_pd - c.b_healthy) * (1.0 - 180.0 / 225.0)));
  CHECK(suppression(0.0, c) == 0.0);
  CHECK(suppression(45.0, c) == doctest::Approx(0.5));
}

TEST_CASE("untreated fixed point") {
  EnvConfig c = quiet();
  c.initial_beta = 0.2;
  EnvState s = make_env_state(c, 1);
  for (int i = 0; i < 60; ++i) env_step(s, 0);
  CHECK(s.beta_level == doctest::Approx(c.b_pd));
}

TEST_CASE("reward") {
  CHECK(compute_reward(0.5, 6, 0.14) == doctest::Approx(-1.34));
  CHECK(compute_reward(0.5, 6, 0.14, 2.0) == doctest::Approx(-1.84));
  for (int k = 1; k < 13; ++k) {
    CHECK(compute_reward(0.3, k, 0.2) - compute_reward(0.3, k - 1, 0.2) == doctest::Approx(-0.2));
  }
}

TEST_CASE("error index oracle") {
  EnvConfig c = quiet();
  EnvState s = make_env_state(c, 2);
  s.beta_level = c.b_healthy;
  CHECK(error_index_oracle(s) == doctest::Approx(0.055));
  s.beta_level = 1.0;
  CHECK(error_index_oracle(s) == doctest::Approx(0.53));

  EnvConfig noisy;
  noisy.ei_noise = 5.0;
  noisy.ei_noise_model = EiNoiseModel::kAdditive;
  EnvState n = make_env_state(noisy, 3);
  for (int i = 0; i < 200; ++i) {
    const double ei = error_index_oracle(n);
    CHECK(ei >= 0.0);
    CHECK(ei <= 1.0);
  }
  CHECK(expected_error_index(c.b_healthy, c) < 0.1);
}

TEST_CASE("observation") {
  const EnvConfig c;
  EnvState s = make_env_state(c, 4);
  const auto obs = env_step(s, 7);
  CHECK(obs.context.size() == 20);
  CHECK(obs.frequency_hz == 105.0);
  CHECK(obs.pulse_count == 210);
  double mean = 0.0;
  for (double v : obs.context.beta_samples) mean += v;
  CHECK(obs.mean_beta == doctest::Approx(mean / 20.0));
  CHECK(obs.reward == doctest::Approx(compute_reward(obs.mean_beta, 7, c.penalty_coefficient,
                                                     c.beta_weight)));
  CHECK(s.sim_time == doctest::Approx(2.0));
  CHECK(s.steps == 1);

  // Normalized so that the untreated state averages near one.
  EnvState pd = make_env_state(c, 5);
  double acc = 0.0;
  for (int i = 0; i < 50; ++i) acc += env_step(pd, 0).mean_beta;
  CHECK(acc / 50.0 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("latent stays in bounds under any arm sequence") {
  EnvConfig c;
  c.noise_sigma_latent = 0.5;
  EnvState s = make_env_state(c, 6);
  Rng arms(1);
  for (int i = 0; i < 300; ++i) {
    env_step(s, arms.uniform_index(13));
    CHECK(s.beta_level >= 0.0);
    CHECK(s.beta_level <= 1.0);
  }
}

TEST_CASE("steady-state suppression is monotone in the arm") {
  for (double n : {1.0, 4.0, 12.0}) {
    EnvConfig c = quiet();
    c.hill_exponent = n;
    double prev_b = 2.0, prev_power = 1e9;
    for (int k = 0; k < 13; ++k) {
      EnvState s = make_env_state(c, 0);
      for (int i = 0; i < 80; ++i) env_step(s, k);
      const double power = expected_beta_power(s.beta_level, c);
      if (k > 0) CHECK(s.beta_level < prev_b);
      CHECK(power <= prev_power);
      prev_b = s.beta_level;
      prev_power = power;
    }
  }
}

TEST_CASE("healthy brain pins the latent target") {
  const EnvConfig c = quiet();
  EnvState s = make_env_state(c, 7, true);
  for (int i = 0; i < 40; ++i) env_step(s, 0);
  CHECK(s.beta_level == doctest::Approx(c.b_healthy));
}

TEST_CASE("same seed, same observations") {
  const EnvConfig c;
  EnvState a = make_env_state(c, 42), b = make_env_state(c, 42), other = make_env_state(c, 43);
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    const auto x = env_step(a, i % 13), y = env_step(b, i % 13), z = env_step(other, i % 13);
    CHECK(x.context.beta_samples == y.context.beta_samples);
    CHECK(x.error_index == y.error_index);
    differs = differs || x.context.beta_samples != z.context.beta_samples;
  }
  CHECK(differs);
}

TEST_CASE("beta and error index correlation") {
  SUBCASE("noise off gives a near-perfect coupling") {
    const auto r = calibrate_correlation(quiet(), 60, 1);
    CHECK(r.pearson_r >= 0.99);
  }
  SUBCASE("default calibration") {
    const auto r = calibrate_correlation(EnvConfig{}, 200, 3);
    CHECK(r.mean_beta.size() == 200);
    CHECK(r.pearson_r >= 0.80);
    CHECK(r.pearson_r <= 0.95);
  }
  SUBCASE("observation noise drowns the coupling") {
    EnvConfig c;
    c.noise_sigma_obs = 50.0;
    CHECK(std::abs(calibrate_correlation(c, 200, 4).pearson_r) < 0.3);
  }
  SUBCASE("too few episodes") {
    CHECK_THROWS_AS(calibrate_correlation(EnvConfig{}, 10, 0), InvalidInput);
  }
  SUBCASE("constant samples have no correlation") {
    CHECK_THROWS_AS(pearson({1.0, 1.0, 1.0}, {0.1, 0.5, 0.2}), UndefinedCorrelation);
    CHECK(pearson({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(1.0));
  }
}

TEST_CASE("correlation tuning reaches its target") {
  const auto t = tune_correlation(EnvConfig{}, 0.9, CalibrationKnob::kEiNoise, 60, 5);
  CHECK(t.pearson_r == doctest::Approx(0.9).epsilon(0.02));
  CHECK(t.config.ei_noise == t.knob_value);
}

TEST_CASE("periodic controllers") {
  CHECK(periodic_controller(90.0)->arm() == 6);
  CHECK(periodic_controller(180.0)->arm() == 12);
  CHECK(periodic_controller(0.0)->arm() == 0);
  CHECK_THROWS_AS(periodic_controller(100.0), InvalidInput);
  CHECK_THROWS_AS(periodic_controller(195.0), InvalidInput);
}

TEST_CASE("delayed reward buffer") {
  DelayedRewardBuffer five(5);
  int batches = 0;
  std::size_t delivered = 0;
  for (int i = 0; i < 100; ++i) {
    if (auto b = five.push(Sample{i % 13, Eigen::VectorXd::Constant(1, i), 0.0})) {
      ++batches;
      CHECK(b->size() == 5);
      CHECK(b->front().context[0] == delivered);
      delivered += b->size();
    }
  }
  CHECK(batches == 20);
  CHECK(delivered == 100);
  CHECK_FALSE(five.flush().has_value());

  DelayedRewardBuffer one(1);
  CHECK(one.push(Sample{}).has_value());

  DelayedRewardBuffer ten(10);
  for (int i = 0; i < 13; ++i) (void)ten.push(Sample{});
  CHECK(ten.pending() == 3);
  CHECK(ten.flush()->size() == 3);
  CHECK_THROWS_AS(DelayedRewardBuffer(0), InvalidInput);
}

TEST_CASE("config validation") {
  EnvConfig c;
  CHECK_NOTHROW(c.validate());
  for (auto mutate : std::vector<void (*)(EnvConfig&)>{
           [](EnvConfig& e) { e.kappa = 0.0; },
           [](EnvConfig& e) { e.kappa = 1.5; },
           [](EnvConfig& e) { e.f_half = -1.0; },
           [](EnvConfig& e) { e.noise_sigma_obs = -0.1; },
           [](EnvConfig& e) { e.sample_rate = 0.0; },
           [](EnvConfig& e) { e.b_healthy = 2.0; },
           [](EnvConfig& e) { e.sample_interval = 3.0; },
       }) {
    EnvConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
  }
  CHECK(to_string(ei_noise_model_from_string("binomial")) == "binomial");
  CHECK_THROWS_AS(ei_noise_model_from_string("poisson"), InvalidInput);
}
