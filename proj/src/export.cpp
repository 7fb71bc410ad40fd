#include "adbs/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "adbs/config.hpp"
#include "adbs/error.hpp"

namespace adbs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ExportFormat export_format_from_string(const std::string& s) {
  if (s == "csv") return ExportFormat::kCsv;
  if (s == "jsonl") return ExportFormat::kJsonLines;
  throw InvalidInput("format must be csv or jsonl (got '" + s + "')");
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_trials(const std::vector<LabeledTrials>& groups, ExportFormat format) {
  std::string out;
  if (format == ExportFormat::kCsv) out = std::string(kTrialColumns) + "\n";
  for (const auto& g : groups) {
    for (const auto& t : *g.trials) {
      const auto regret = cumulative_regret(t);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (format == ExportFormat::kCsv) {
          out += csv_field(g.label) + ',' + std::to_string(t.seed) + ',' +
                 std::to_string(r.round) + ',' + std::to_string(r.arm) + ',' +
                 format_double(r.frequency_hz) + ',' + format_double(r.reward) + ',' +
                 format_double(r.mean_beta) + ',' + format_double(r.error_index) + ',' +
                 format_double(regret[i]) + ',' + (r.explored ? "1" : "0") + '\n';
        } else {
          // Hand-assembled so the number formatting matches the CSV exactly.
          out += "{\"label\":" + json(g.label).dump() + ",\"seed\":" + std::to_string(t.seed) +
                 ",\"round\":" + std::to_string(r.round) + ",\"arm\":" + std::to_string(r.arm) +
                 ",\"frequency_hz\":" + format_double(r.frequency_hz) +
                 ",\"reward\":" + format_double(r.reward) +
                 ",\"mean_beta\":" + format_double(r.mean_beta) +
                 ",\"error_index\":" + format_double(r.error_index) +
                 ",\"cumulative_regret\":" + format_double(regret[i]) +
                 ",\"explored\":" + (r.explored ? "true" : "false") + "}\n";
        }
      }
    }
  }
  return out;
}

std::string render_summary(const SweepResult& result) {
  std::string out =
      "axis,value,trials_ok,final_regret_mean,final_regret_se,total_reward_mean,"
      "total_reward_se,avg_arm_after_threshold_mean,avg_arm_after_threshold_se,"
      "mean_beta_after_threshold,error_index_after_threshold,explore_rounds_mean,"
      "reference_avg_arm,error\n";
  const std::string axis = to_string(result.axis);
  for (const auto& cell : result.cells) {
    const auto& s = cell.summary;
    out += axis + ',' + csv_field(cell.value) + ',' + std::to_string(s.trials_ok) + ',' +
           format_double(s.final_regret_mean) + ',' + format_double(s.final_regret_se) + ',' +
           format_double(s.total_reward_mean) + ',' + format_double(s.total_reward_se) + ',' +
           format_double(s.avg_arm_after_threshold_mean) + ',' +
           format_double(s.avg_arm_after_threshold_se) + ',' +
           format_double(s.mean_beta_after_threshold) + ',' +
           format_double(s.error_index_after_threshold) + ',' +
           format_double(s.explore_rounds_mean) + ',' + opt_number(s.reference_avg_arm) + ',' +
           csv_field(cell.error.value_or("")) + '\n';
  }
  return out;
}

std::string render_curves(const SweepResult& result) {
  std::string out = "axis,value,round,reward_mean,reward_se,regret_mean,regret_se\n";
  const std::string axis = to_string(result.axis);
  for (const auto& cell : result.cells) {
    for (const auto& p : cell.curve) {
      out += axis + ',' + csv_field(cell.value) + ',' + std::to_string(p.round) + ',' +
             format_double(p.reward_mean) + ',' + format_double(p.reward_se) + ',' +
             format_double(p.regret_mean) + ',' + format_double(p.regret_se) + '\n';
    }
  }
  return out;
}

std::string render_bench(const std::vector<BenchRow>& rows) {
  std::string out =
      "policy,median_wall_seconds,variance_evaluations_mean,fit_calls_mean,explore_rounds_mean\n";
  for (const auto& r : rows) {
    out += csv_field(r.label) + ',' + format_double(r.median_wall_seconds) + ',' +
           format_double(r.variance_evaluations_mean) + ',' + format_double(r.fit_calls_mean) +
           ',' + format_double(r.explore_rounds_mean) + '\n';
  }
  return out;
}

std::string render_timing(const std::vector<LabeledTrials>& groups) {
  std::string out = "label,seed,total_wall_seconds\n";
  for (const auto& g : groups) {
    for (const auto& t : *g.trials) {
      out += csv_field(g.label) + ',' + std::to_string(t.seed) + ',' +
             format_double(t.total_wall_seconds) + '\n';
    }
  }
  return out;
}

std::string render_failures(const std::vector<LabeledTrials>& groups) {
  std::string out;
  for (const auto& g : groups) {
    for (const auto& t : *g.trials) {
      if (!t.failure) continue;
      out += json{{"label", g.label},
                  {"seed", t.seed},
                  {"round", t.failure->round},
                  {"kind", t.failure->kind},
                  {"message", t.failure->message}}
                 .dump() +
             '\n';
    }
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

json run_metadata(const RunConfig& config, const std::string& command) {
  return {{"command", command},
          {"library_version", kLibraryVersion},
          {"seeds", config.seeds},
          {"trial_columns", kTrialColumns},
          {"config", to_json(config)}};
}

namespace {

std::string trials_file(ExportFormat f) {
  return f == ExportFormat::kCsv ? "trials.csv" : "trials.jsonl";
}

void write_common(const RunConfig& config, const std::vector<LabeledTrials>& groups,
                  const fs::path& dir, json metadata) {
  const ExportFormat format = export_format_from_string(config.format);
  write_text_file(dir / trials_file(format), render_trials(groups, format));
  write_text_file(dir / "timing.csv", render_timing(groups));
  write_text_file(dir / "failures.jsonl", render_failures(groups));
  write_text_file(dir / "metadata.json", metadata.dump(2) + "\n");
}

}  // namespace

void export_run(const RunConfig& config, const std::vector<TrialRecord>& records,
                const fs::path& dir) {
  write_common(config, {{config.policy.name, &records}}, dir, run_metadata(config, "run"));
}

void export_sweep(const RunConfig& config, const SweepResult& result, const fs::path& dir) {
  std::vector<LabeledTrials> groups;
  for (const auto& cell : result.cells) groups.push_back({cell.value, &cell.trials});
  json meta = run_metadata(config, "sweep");
  meta["axis"] = to_string(result.axis);
  json values = json::array();
  for (const auto& cell : result.cells) values.push_back(cell.value);
  meta["values"] = values;
  write_common(config, groups, dir, meta);
  write_text_file(dir / "summary.csv", render_summary(result));
  write_text_file(dir / "curves.csv", render_curves(result));
}

void export_bench(const RunConfig& config, const std::vector<BenchRow>& rows,
                  const fs::path& dir) {
  write_text_file(dir / "bench.csv", render_bench(rows));
  write_text_file(dir / "metadata.json", run_metadata(config, "bench").dump(2) + "\n");
}

}  // namespace adbs
