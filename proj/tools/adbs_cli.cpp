#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adbs/config.hpp"
#include "adbs/environment.hpp"
#include "adbs/error.hpp"
#include "adbs/export.hpp"
#include "adbs/harness.hpp"

using namespace adbs;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string seed;
  std::string seeds;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON configuration file");
  cmd->add_option("--seed", f.seed, "single seed");
  cmd->add_option("--seeds", f.seeds, "seed range n..m or list a,b,c");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--format", f.format, "trial export format")->check(CLI::IsMember({"csv", "jsonl"}));
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig config = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
  if (!f.seed.empty() && !f.seeds.empty()) throw InvalidInput("use only one of --seed and --seeds");
  if (!f.seed.empty()) {
    config.seeds = parse_seed_list(f.seed);
    if (config.seeds.size() != 1) throw InvalidInput("--seed takes a single value");
  }
  if (!f.seeds.empty()) config.seeds = parse_seed_list(f.seeds);
  if (!f.out.empty()) config.output = f.out;
  if (!f.format.empty()) config.format = f.format;
  return config;
}

std::vector<std::string> split_values(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& r : raw) {
    std::stringstream ss(r);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

int fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive DBS frequency selection with contextual bandits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kLibraryVersion);

  CommonFlags run_flags, sweep_flags, calib_flags, bench_flags;
  auto* run_cmd = app.add_subcommand("run", "run one policy over the configured seeds");
  add_common(run_cmd, run_flags);
  std::string policy_override;
  run_cmd->add_option("--policy", policy_override, "policy spec, e.g. eps_neural_ts:0.8");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis");
  add_common(sweep_cmd, sweep_flags);
  std::string axis;
  std::vector<std::string> values;
  sweep_cmd->add_option("--axis", axis, "sweep axis")
      ->required()
      ->check(CLI::IsMember({"penalty", "epsilon", "algorithm", "delay"}));
  sweep_cmd->add_option("--values", values, "comma or space separated values")->required();

  auto* calib_cmd = app.add_subcommand("calibrate", "beta/EI correlation of the surrogate");
  add_common(calib_cmd, calib_flags);
  int episodes = 200;
  bool tune = false;
  double target = 0.866;
  std::string knob = "ei_noise";
  calib_cmd->add_option("--episodes", episodes, "random-arm episodes")->check(CLI::PositiveNumber);
  calib_cmd->add_flag("--tune", tune, "bisect a noise constant to hit --target");
  calib_cmd->add_option("--target", target, "target Pearson r");
  calib_cmd->add_option("--knob", knob, "noise constant to tune")
      ->check(CLI::IsMember({"ei_noise", "noise_sigma_obs"}));

  auto* bench_cmd = app.add_subcommand("bench", "runtime and work counts per policy");
  add_common(bench_cmd, bench_flags);
  std::vector<std::string> bench_policies = {"eps_neural_ts:0.8", "eps_neural_ts:1", "neural_ts",
                                             "neural_ucb"};
  bench_cmd->add_option("--policies", bench_policies, "policy specs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      RunConfig config = resolve(run_flags);
      if (!policy_override.empty()) {
        config = apply_sweep_value(config, SweepAxis::kAlgorithm, policy_override);
      }
      config.validate();
      std::vector<TrialRecord> records(config.seeds.size());
      parallel_for(records.size(), [&](std::size_t i) { records[i] = run_trial(config, config.seeds[i]); });
      export_run(config, records, config.output);
      double regret = 0.0;
      int failed = 0;
      for (const auto& r : records) {
        if (r.failure) {
          ++failed;
        } else {
          regret += cumulative_regret(r).back();
        }
      }
      const int ok = static_cast<int>(records.size()) - failed;
      json status = {{"status", failed ? "partial" : "ok"},
                     {"output", config.output},
                     {"trials", records.size()},
                     {"failed", failed}};
      if (ok > 0) status["mean_final_regret"] = regret / ok;
      std::cout << status.dump() << "\n";
      return failed ? 2 : 0;
    }
    if (*sweep_cmd) {
      RunConfig config = resolve(sweep_flags);
      config.validate();
      const SweepAxis ax = sweep_axis_from_string(axis);
      const auto result = sweep(config, ax, split_values(values));
      export_sweep(config, result, config.output);
      int errors = 0;
      for (const auto& c : result.cells) errors += c.error ? 1 : 0;
      std::cout << json{{"status", errors ? "partial" : "ok"},
                        {"output", config.output},
                        {"cells", result.cells.size()},
                        {"cells_with_errors", errors}}
                       .dump()
                << "\n";
      return errors ? 2 : 0;
    }
    if (*calib_cmd) {
      RunConfig config = resolve(calib_flags);
      config.env.validate();
      const std::uint64_t seed = config.seeds.front();
      json out;
      if (tune) {
        const auto k = knob == "ei_noise" ? CalibrationKnob::kEiNoise
                                          : CalibrationKnob::kObservationNoise;
        const auto t = tune_correlation(config.env, target, k, episodes, seed);
        out = {{"status", "ok"},
               {"knob", knob},
               {"value", t.knob_value},
               {"pearson_r", t.pearson_r},
               {"iterations", t.iterations},
               {"env", to_json(t.config)}};
      } else {
        const auto c = calibrate_correlation(config.env, episodes, seed);
        out = {{"status", "ok"}, {"episodes", episodes}, {"pearson_r", c.pearson_r}};
        std::string csv = "episode,mean_beta,error_index\n";
        for (std::size_t i = 0; i < c.mean_beta.size(); ++i) {
          csv += std::to_string(i) + ',' + format_double(c.mean_beta[i]) + ',' +
                 format_double(c.error_index[i]) + '\n';
        }
        write_text_file(std::filesystem::path(config.output) / "calibration.csv", csv);
        write_text_file(std::filesystem::path(config.output) / "metadata.json",
                        run_metadata(config, "calibrate").dump(2) + "\n");
        out["output"] = config.output;
      }
      std::cout << out.dump() << "\n";
      return 0;
    }
    if (*bench_cmd) {
      RunConfig config = resolve(bench_flags);
      if (bench_flags.seeds.empty() && bench_flags.seed.empty() && bench_flags.config_path.empty()) {
        config.seeds = {0, 1, 2};
      }
      config.validate();
      const auto rows = bench_runtime(config, split_values(bench_policies));
      export_bench(config, rows, config.output);
      std::cout << render_bench(rows);
      return 0;
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
  return 0;
}
