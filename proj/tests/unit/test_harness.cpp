#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adbs/config.hpp"
#include "adbs/error.hpp"
#include "adbs/export.hpp"
#include "adbs/harness.hpp"

using namespace adbs;
namespace fs = std::filesystem;

namespace {

RunConfig small(const std::string& policy = "eps_neural_ts") {
  RunConfig c;
  c.policy.name = policy;
  c.policy.width = 8;
  c.policy.steps = 20;
  c.rounds = 20;
  c.threshold_round = 10;
  c.seeds = {0, 1};
  return c;
}

TrialRecord with_errors(std::vector<double> ei) {
  TrialRecord r;
  for (std::size_t i = 0; i < ei.size(); ++i) {
    TrialRow row;
    row.round = static_cast<int>(i) + 1;
    row.error_index = ei[i];
    r.rows.push_back(row);
  }
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adbs_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("cumulative regret") {
  CHECK(cumulative_regret(with_errors(std::vector<double>(100, 0.0))).back() == 0.0);
  CHECK(cumulative_regret(with_errors(std::vector<double>(100, 0.1))).back() ==
        doctest::Approx(10.0));
  CHECK(cumulative_regret(with_errors({0.5, 0.3})) == std::vector<double>{0.5, 0.8});
}

TEST_CASE("periodic controller trial") {
  RunConfig c = small("periodic");
  c.rounds = 100;
  const TrialRecord r = run_trial(c, 3);
  REQUIRE(r.rows.size() == 100);
  CHECK_FALSE(r.failure.has_value());
  for (const auto& row : r.rows) {
    CHECK(row.arm == 6);
    CHECK(row.frequency_hz == 90.0);
  }
  const auto regret = cumulative_regret(r);
  for (std::size_t i = 1; i < regret.size(); ++i) CHECK(regret[i] >= regret[i - 1]);
}

TEST_CASE("epsilon 1 matches vanilla NeuralTS") {
  RunConfig eps = small("eps_neural_ts");
  eps.policy.epsilon = 1.0;
  RunConfig vanilla = small("neural_ts");
  for (std::uint64_t seed : {0u, 5u}) {
    const auto a = run_trial(eps, seed), b = run_trial(vanilla, seed);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].arm == b.rows[i].arm);
    CHECK(a.final_state.at("theta") == b.final_state.at("theta"));
  }
}

TEST_CASE("unit delay equals the plain loop") {
  const RunConfig c = small();
  const TrialRecord wrapped = run_trial(c, 2);
  // Hand-rolled loop without the buffer.
  auto policy = make_policy(c.policy, c.env, 2);
  EnvState env = make_env_state(c.env, 2);
  ContextFeature ctx = observe_context(env);
  for (int t = 1; t <= c.rounds; ++t) {
    const ArmContexts arms = unit_normalized(embed_context(ctx, c.env.arms.arm_count));
    const Decision d = policy->select(arms, t);
    EnvObservation obs = env_step(env, d.arm);
    const Sample s{d.arm, arms[d.arm], obs.reward};
    policy->update(std::span<const Sample>(&s, 1));
    const auto& row = wrapped.rows[static_cast<std::size_t>(t - 1)];
    CHECK(row.arm == d.arm);
    CHECK(row.reward == obs.reward);
    CHECK(row.error_index == obs.error_index);
    ctx = obs.context;
  }
  CHECK(policy->snapshot() == wrapped.final_state);
}

TEST_CASE("batched delays") {
  RunConfig c = small();
  c.rounds = 100;
  c.policy.steps = 5;
  for (int b : {5, 10}) {
    c.delay = b;
    const TrialRecord r = run_trial(c, 1);
    CHECK(r.counters.update_batches == 100 / b);
    CHECK(r.counters.samples_seen == 100);
  }
  c.delay = 30;  // 3 full batches plus a flushed remainder of 10
  CHECK(run_trial(c, 1).counters.update_batches == 4);
}

TEST_CASE("zero epsilon never evaluates the variance") {
  RunConfig c = small();
  c.policy.epsilon = 0.0;
  const TrialRecord r = run_trial(c, 4);
  CHECK(r.counters.variance_evaluations == 0);
  CHECK(r.counters.explore_rounds == 0);
}

TEST_CASE("trial failures stop the trial and keep the round") {
  RunConfig c = small();
  // Rewards near the top of the double range overflow the squared loss.
  c.env.beta_weight = 1e300;
  const TrialRecord r = run_trial(c, 0);
  REQUIRE(r.failure.has_value());
  CHECK(r.failure->round >= 1);
  CHECK(r.rows.size() == static_cast<std::size_t>(r.failure->round - 1));
}

TEST_CASE("sweeps") {
  SUBCASE("single value, single seed collapses to the trial") {
    RunConfig c = small();
    c.seeds = {3};
    const auto res = sweep(c, SweepAxis::kEpsilon, {"0.5"});
    REQUIRE(res.cells.size() == 1);
    const auto& cell = res.cells[0];
    const auto regret = cumulative_regret(cell.trials[0]);
    CHECK(cell.summary.final_regret_mean == regret.back());
    CHECK(cell.summary.final_regret_se == 0.0);
    CHECK(cell.curve.back().regret_mean == regret.back());
  }
  SUBCASE("mean curves are the seed average") {
    RunConfig c = small("lin_ucb");
    c.seeds = {0, 1, 2};
    const auto res = sweep(c, SweepAxis::kPenalty, {"0.14", "0.5"});
    for (const auto& cell : res.cells) {
      for (std::size_t t = 0; t < cell.curve.size(); ++t) {
        double mean = 0.0;
        for (const auto& trial : cell.trials) mean += cumulative_regret(trial)[t];
        CHECK(cell.curve[t].regret_mean == doctest::Approx(mean / 3.0));
      }
    }
    REQUIRE(res.cells[0].summary.reference_avg_arm.has_value());
    CHECK(*res.cells[0].summary.reference_avg_arm == 8.0);
    CHECK(*res.cells[1].summary.reference_avg_arm == 0.6);
  }
  SUBCASE("a bad cell is annotated, others still run") {
    RunConfig c = small("periodic");
    const auto res = sweep(c, SweepAxis::kAlgorithm, {"periodic:100", "periodic:90", "nope"});
    CHECK(res.cells[0].error.has_value());
    CHECK_FALSE(res.cells[1].error.has_value());
    CHECK(res.cells[1].summary.trials_ok == 2);
    CHECK(res.cells[2].error.has_value());
  }
  CHECK_THROWS_AS(sweep(small(), SweepAxis::kDelay, {}), InvalidInput);
  CHECK_THROWS_AS(apply_sweep_value(small(), SweepAxis::kDelay, "2.5"), InvalidInput);
  CHECK(apply_sweep_value(small(), SweepAxis::kAlgorithm, "eps_neural_ts:0.2").policy.epsilon == 0.2);
  CHECK(sweep_axis_from_string(to_string(SweepAxis::kDelay)) == SweepAxis::kDelay);
}

TEST_CASE("bench counts") {
  RunConfig c = small();
  c.seeds = {0, 1, 2};
  const auto rows = bench_runtime(c, {"eps_neural_ts:0.8", "eps_neural_ts:0"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].variance_evaluations_mean == 0.0);
  CHECK(rows[0].explore_rounds_mean > 0.0);
  c.seeds = {0, 1};
  CHECK_THROWS_AS(bench_runtime(c, {"eps_neural_ts"}), InvalidInput);
}

TEST_CASE("run config validation") {
  CHECK_NOTHROW(RunConfig{}.validate());
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  };
  bad([](RunConfig& c) { c.rounds = 0; });
  bad([](RunConfig& c) { c.seeds.clear(); });
  bad([](RunConfig& c) { c.delay = 0; });
  bad([](RunConfig& c) { c.policy.epsilon = 1.5; });
  bad([](RunConfig& c) { c.policy.name = "mystery"; });
  bad([](RunConfig& c) { c.policy.name = "periodic"; c.policy.frequency_hz = 7.0; });
  bad([](RunConfig& c) { c.format = "xml"; });
  bad([](RunConfig& c) { c.env.kappa = 0.0; });
}

TEST_CASE("JSON configuration") {
  const auto j = nlohmann::json::parse(R"({
    "policy": {"name": "neural_ucb", "nu": 0.5, "ucb1_delta": null},
    "env": {"penalty_coefficient": 0.2},
    "rounds": 30,
    "seeds": "2..4"
  })");
  const RunConfig c = run_config_from_json(j);
  CHECK(c.policy.name == "neural_ucb");
  CHECK(c.policy.nu == 0.5);
  CHECK(c.policy.epsilon == RunConfig{}.policy.epsilon);
  CHECK(c.env.penalty_coefficient == 0.2);
  CHECK(c.rounds == 30);
  CHECK(c.seeds == std::vector<std::uint64_t>{2, 3, 4});

  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"round": 3})")), InvalidInput);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"env": {"kapa": 1}})")),
                  InvalidInput);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"rounds": "ten"})")),
                  InvalidInput);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"rounds": 2.5})")),
                  InvalidInput);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), IoError);

  CHECK(parse_seed_list("7") == std::vector<std::uint64_t>{7});
  CHECK(parse_seed_list("1,4") == std::vector<std::uint64_t>{1, 4});
  CHECK(parse_seed_list("0..2") == std::vector<std::uint64_t>{0, 1, 2});
  CHECK_THROWS_AS(parse_seed_list("3..1"), InvalidInput);
  CHECK_THROWS_AS(parse_seed_list("x"), InvalidInput);
}

TEST_CASE("exports") {
  RunConfig c = small("periodic");
  c.rounds = 100;
  c.seeds = {1};
  const std::vector<TrialRecord> one = {run_trial(c, 1)};

  const std::string csv = render_trials({{"p", &one}}, ExportFormat::kCsv);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 101);
  CHECK(csv.substr(0, csv.find('\n')) == kTrialColumns);

  const std::vector<TrialRecord> none;
  CHECK(render_trials({{"p", &none}}, ExportFormat::kCsv) == std::string(kTrialColumns) + "\n");
  CHECK(render_trials({{"p", &none}}, ExportFormat::kJsonLines).empty());

  const std::string jsonl = render_trials({{"p", &one}}, ExportFormat::kJsonLines);
  std::istringstream in(jsonl);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto row = nlohmann::json::parse(line);
    CHECK(row.at("arm") == 6);
    ++n;
  }
  CHECK(n == 100);

  SUBCASE("byte-identical repeat") {
    const fs::path a = scratch_dir("a"), b = scratch_dir("b");
    export_run(c, {run_trial(c, 1)}, a);
    export_run(c, {run_trial(c, 1)}, b);
    for (const char* f : {"trials.csv", "metadata.json"}) {
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto meta = nlohmann::json::parse(slurp(a / "metadata.json"));
    CHECK(meta.at("library_version") == kLibraryVersion);
    CHECK(meta.at("config").at("policy").at("name") == "periodic");
    CHECK(meta.at("seeds") == nlohmann::json::array({1}));
  }
  SUBCASE("empty record list") {
    const fs::path d = scratch_dir("empty");
    export_run(c, {}, d);
    CHECK(slurp(d / "trials.csv") == std::string(kTrialColumns) + "\n");
    CHECK(fs::exists(d / "metadata.json"));
  }
  SUBCASE("I/O errors name the path") {
    try {
      write_text_file("/proc/adbs_cannot_write/trials.csv", "x");
      FAIL("expected an I/O error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("/proc/adbs_cannot_write") != std::string::npos);
    }
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, -1.34, 1e-300, 123456.789, 2.0 / 3.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(6.0) == "6");
}
