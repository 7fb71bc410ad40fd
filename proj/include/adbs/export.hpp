#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "adbs/harness.hpp"

namespace adbs {

// Shortest round-trip representation, locale independent.
std::string format_double(double v);

// Per-round rows in long format. Column order:
// label,seed,round,arm,frequency_hz,reward,mean_beta,error_index,cumulative_regret,explored
inline constexpr const char* kTrialColumns =
    "label,seed,round,arm,frequency_hz,reward,mean_beta,error_index,cumulative_regret,explored";

struct LabeledTrials {
  std::string label;
  const std::vector<TrialRecord>* trials = nullptr;
};

enum class ExportFormat { kCsv, kJsonLines };
ExportFormat export_format_from_string(const std::string& s);

std::string render_trials(const std::vector<LabeledTrials>& groups, ExportFormat format);
std::string render_summary(const SweepResult& result);
std::string render_curves(const SweepResult& result);
std::string render_bench(const std::vector<BenchRow>& rows);
// Wall-clock time per trial; kept apart from the deterministic files.
std::string render_timing(const std::vector<LabeledTrials>& groups);
std::string render_failures(const std::vector<LabeledTrials>& groups);

void write_text_file(const std::filesystem::path& path, const std::string& text);

// Writes trials.{csv,jsonl}, timing.csv and metadata.json under `dir`.
void export_run(const RunConfig& config, const std::vector<TrialRecord>& records,
                const std::filesystem::path& dir);
// Adds summary.csv and curves.csv for sweeps.
void export_sweep(const RunConfig& config, const SweepResult& result,
                  const std::filesystem::path& dir);
void export_bench(const RunConfig& config, const std::vector<BenchRow>& rows,
                  const std::filesystem::path& dir);

nlohmann::json run_metadata(const RunConfig& config, const std::string& command);

}  // namespace adbs
