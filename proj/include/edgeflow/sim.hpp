/**
 * @file sim.hpp
 * @brief Virtual gateway: heat-up under load, stepped throttling, slowdown.
 *
 * Time advances in fixed steps of `dt`. Within a step, running jobs share
 * the cores (processor sharing at `freq / freq_max` per core) and the step
 * is split at every job completion, so completion times are exact.
 * Temperature follows
 *
 *     d temp / dt = heat_rate * busy_cores * (f / f_max)^power_exponent
 *                   - cool_rate * (temp - ambient)
 *
 * integrated exactly over each slice of constant load. The governor polls
 * once per step end: at or above the limit the frequency drops one level,
 * and further while a fully loaded step would still heat, down to a gated
 * clock; below `limit - hysteresis` it recovers one level.
 *
 * One work unit is one core-second at the top frequency.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/engine.hpp"
#include "edgeflow/policy.hpp"

namespace edgeflow::sim {

struct GatewayModel {
  int cores = 4;
  std::vector<double> freq_levels_mhz{1200.0, 900.0, 600.0};
  double t_ambient_c = 45.0;
  double t_limit_c = 80.0;
  double hysteresis_c = 3.0;
  double heat_rate = 0.091;
  double cool_rate = 0.0075;
  double power_exponent = 2.5;
  double base_job_work = 24.5;
  double duration_jitter = 1.5;
  /// Starting temperature; ambient when unset.
  std::optional<double> initial_temp_c;
  double mem_base = 0.35;
  double mem_per_job = 0.08;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  double start_temp() const { return initial_temp_c.value_or(t_ambient_c); }
  double f_max() const { return freq_levels_mhz.front(); }
  /// Frequency at governor `level`; level == freq_levels_mhz.size() is the
  /// clock-gated state and runs at 0.
  double freq_mhz(std::size_t level) const { return level < freq_levels_mhz.size() ? freq_levels_mhz[level] : 0.0; }
  /// mem_base + mem_per_job * running, clamped to [0, 1].
  double mem_util(std::size_t running) const;
};

struct RunningJob {
  JobId id = 0;
  double remaining = 0.0;

  bool operator==(const RunningJob&) const = default;
};

struct GatewayState {
  double clock_s = 0.0;
  double temp_c = 45.0;
  /// Index into freq_levels_mhz, or its size when the clock is gated.
  std::size_t freq_level = 0;
  std::vector<RunningJob> running;

  bool operator==(const GatewayState&) const = default;
};

GatewayState initial_state(const GatewayModel& model);

struct Completion {
  JobId id;
  double at_s;
};

/// Advances `state` by `dt_s`. Finished jobs are removed and, when
/// `completed` is given, appended to it in completion order.
GatewayState step(const GatewayModel& model, const GatewayState& state, double dt_s,
                  std::vector<Completion>* completed = nullptr);

/// Stateful wrapper around step() tracking throttle onset.
class Gateway {
 public:
  explicit Gateway(GatewayModel model);

  void admit(JobId id, double work);
  std::vector<Completion> advance(double dt_s);

  const GatewayModel& model() const noexcept { return model_; }
  const GatewayState& state() const noexcept { return state_; }
  double freq_mhz() const { return model_.freq_mhz(state_.freq_level); }
  std::size_t running() const noexcept { return state_.running.size(); }
  double cpu_util() const;
  double max_temp_c() const noexcept { return max_temp_; }
  /// First step end with temp >= limit.
  std::optional<double> throttle_onset_s() const noexcept { return onset_; }

 private:
  GatewayModel model_;
  GatewayState state_;
  double max_temp_;
  std::optional<double> onset_;
};

enum class WorkloadMode { ClosedLoop, OpenLoop };

struct WorkloadSpec {
  WorkloadMode mode = WorkloadMode::OpenLoop;
  std::optional<int> parallelism;
  std::optional<double> inter_arrival_s;
  int total_jobs = 120;
  std::uint64_t seed = 42;

  static WorkloadSpec closed_loop(int parallelism, int total_jobs, std::uint64_t seed);
  static WorkloadSpec open_loop(double inter_arrival_s, int total_jobs, std::uint64_t seed);

  /// Throws std::invalid_argument unless exactly the mode's fields are set.
  void validate() const;
};

/// Offloaded jobs complete `service_time_s + rtt_s` after admission.
struct RemoteModel {
  double service_time_s = 12.0;
  double rtt_s = 0.2;

  void validate() const;
};

struct SimOptions {
  double dt_s = 0.1;
  double max_time_s = 1200.0;
};

struct SeriesRow {
  double t_s;
  double temp_c;
  double freq_mhz;
  double cpu_util;
  std::int64_t jobs_in_flight;
};

struct SimResult {
  std::vector<JobRecord> records;
  std::vector<SeriesRow> series;
  std::optional<double> throttle_onset_s;
  double end_time_s = 0.0;
  double max_temp_c = 0.0;
  std::int64_t peak_local_jobs = 0;
  /// True when max_time_s was reached before every job finished.
  bool truncated = false;
};

/// Seeded per-job work offsets in [-jitter, jitter], index = job id - 1.
std::vector<double> job_jitter(std::uint64_t seed, int jobs, double jitter);

/// Flow used by simulate(): inject -> link-out -> [tab-ocr: link-in -> work
/// -> link-out] -> link-in -> sink.
FlowGraph canonical_flow(double work_units);

/// Runs the engine on virtual time against the simulated gateway.
SimResult simulate(const GatewayModel& model, const WorkloadSpec& workload, const PolicySpec& policy,
                   const RemoteModel& remote, const SimOptions& options = {});

/// CSV with header `t_s,temp_c,freq_mhz,cpu_util,jobs_in_flight`.
std::string series_to_csv(const std::vector<SeriesRow>& series);

}  // namespace edgeflow::sim
