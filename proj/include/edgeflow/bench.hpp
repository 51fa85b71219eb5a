// Experiment harness behind the `edgeflow` command line: configuration,
// the characterization and strategy-comparison runs, tolerance checks and
// artifact output.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/remote.hpp"
#include "edgeflow/sim.hpp"

namespace edgeflow::bench {

enum class Mode { Sim, Host };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CharacterizeSettings {
  int parallelism = 4;
  int total_jobs = 60;
  std::uint64_t seed = 42;
  std::string policy = "always-local";
};

struct CompareSettings {
  std::vector<std::string> strategies{"jobs:4", "cpu:0.75", "mem:0.75", "temp:75"};
  double inter_arrival_s = 5.0;
  int total_jobs = 120;
  std::uint64_t seed = 42;
  /// Gateway temperature when each strategy run starts.
  std::optional<double> initial_temp_c = 70.0;
};

struct HostSettings {
  std::string remote_url = "http://127.0.0.1:8780";
  int connect_timeout_ms = 2000;
  int request_timeout_ms = 120000;
  remote::Fallback fallback = remote::Fallback::Local;
  int sample_period_ms = 1000;
  double smoothing_alpha = 1.0;
  std::uint64_t rounds_per_unit = 4'000'000;
  /// Wall seconds per virtual second of the workload schedule.
  double time_scale = 1.0;
  int worker_threads = 16;
};

struct CheckThresholds {
  double pre_band_lo_s = 23.0;
  double pre_band_hi_s = 26.0;
  double pre_band_min_share = 0.9;
  double onset_s = 170.0;
  double onset_tol_s = 30.0;
  double post_mean_s = 29.0;
  double post_mean_tol_s = 1.0;
  double local_fraction_tol = 0.10;
  /// Reference local fraction per strategy.
  std::map<std::string, double> local_fraction{
      {"jobs:4", 0.700}, {"cpu:0.75", 0.625}, {"mem:0.75", 0.708}, {"temp:75", 0.533}};
  std::string lowest_max_duration = "cpu:0.75";
  std::string highest_max_duration = "mem:0.75";
  std::string lowest_local_fraction = "temp:75";
};

struct BenchConfig {
  sim::GatewayModel gateway;
  sim::RemoteModel remote;
  sim::SimOptions sim;
  CharacterizeSettings characterize;
  CompareSettings compare;
  HostSettings host;
  CheckThresholds checks;
  /// Gateway fields whose defaults were fitted to the reference trajectory.
  std::vector<std::string> fitted{"heat_rate", "cool_rate", "power_exponent"};

  void validate() const;
};

/// Parses a JSON config document. Missing fields keep their defaults;
/// unknown fields are rejected. Throws ConfigError.
BenchConfig parse_config(std::string_view text);
BenchConfig load_config(const std::filesystem::path& path);
std::string dump_config(const BenchConfig& config);

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

bool all_pass(const std::vector<CheckResult>& checks);

struct PhaseStats {
  std::size_t pre_count = 0;
  std::size_t pre_in_band = 0;
  double pre_min_s = 0.0;
  double pre_max_s = 0.0;
  double pre_mean_s = 0.0;
  std::optional<double> onset_s;
  std::size_t post_count = 0;
  double post_mean_s = 0.0;
};

/// Pre-throttle: local jobs finished before the onset (all of them when the
/// gateway never throttled). Post-throttle: local jobs admitted at or after it.
PhaseStats phase_stats(const std::vector<JobRecord>& records, std::optional<double> onset_s,
                       const CheckThresholds& band);

struct CharacterizeReport {
  std::vector<JobRecord> records;
  std::vector<sim::SeriesRow> series;
  PhaseStats phases;
  double end_time_s = 0.0;
  double max_temp_c = 0.0;
  std::vector<CheckResult> checks;
};

struct StrategyRow {
  std::string strategy;
  EngineStats stats;
  std::optional<double> onset_s;
  std::vector<JobRecord> records;
  std::vector<sim::SeriesRow> series;
};

struct CompareReport {
  std::vector<StrategyRow> rows;
  std::vector<CheckResult> checks;
};

/// Throws std::runtime_error when the simulation hits its time guard.
CharacterizeReport characterize_sim(const BenchConfig& config);
CompareReport compare_sim(const BenchConfig& config);

std::vector<CheckResult> characterize_checks(const PhaseStats& phases, const CheckThresholds& thresholds);
std::vector<CheckResult> compare_checks(const std::vector<StrategyRow>& rows, const CheckThresholds& thresholds);

/// Runs on the machine itself: real work, host metrics, HTTP offloading.
/// `flow` defaults to sim::canonical_flow when empty.
CharacterizeReport characterize_host(const BenchConfig& config, const FlowGraph& flow);
CompareReport compare_host(const BenchConfig& config, const FlowGraph& flow);

std::string summary_text(const CharacterizeReport& report);
/// Table mirroring Local jobs %, Average duration and Max duration columns.
std::string compare_table(const CompareReport& report);
std::string compare_csv(const CompareReport& report);
std::string checks_text(const std::vector<CheckResult>& checks);

/// Directory-safe name for a strategy, e.g. "cpu:0.75" -> "cpu_0.75".
std::string strategy_slug(std::string_view strategy);

/// Writes via a temporary sibling and rename, so readers never see a
/// partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// jobs.csv, timeseries.csv, summary.txt.
void write_characterize(const CharacterizeReport& report, const std::filesystem::path& out_dir);
/// report.txt, comparison.csv and <slug>/{jobs,timeseries}.csv per strategy.
void write_compare(const CompareReport& report, const std::filesystem::path& out_dir);

}  // namespace edgeflow::bench
