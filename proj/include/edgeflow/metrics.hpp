#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/clock.hpp"

namespace edgeflow {

/// Point-in-time resource readings used for offload decisions.
struct MetricsSnapshot {
  double mem_util = 0.0;      ///< fraction in [0, 1]
  double cpu_util = 0.0;      ///< fraction in [0, 1]
  double cpu_temp_c = 0.0;    ///< degrees Celsius, within [-20, 120]
  std::int64_t jobs_in_flight = 0;
  double cpu_freq_mhz = 0.0;  ///< > 0 when valid
  double taken_at = 0.0;      ///< seconds on the source's clock

  /// Per-field validity; a field read from a broken or wrapped counter is
  /// still clamped into its band but flagged false here.
  struct Validity {
    bool mem = true;
    bool cpu = true;
    bool temp = true;
    bool freq = true;
    bool operator==(const Validity&) const = default;
  } valid;

  bool degraded() const { return !(valid.mem && valid.cpu && valid.temp && valid.freq); }
  bool operator==(const MetricsSnapshot&) const = default;
};

inline constexpr double kMinTempC = -20.0;
inline constexpr double kMaxTempC = 120.0;

/// Clamps every field into its band, clearing the validity flag of any field
/// that had to be moved.
MetricsSnapshot sanitize(MetricsSnapshot snapshot);

class GaugeUnderflow : public std::logic_error {
 public:
  GaugeUnderflow() : std::logic_error("jobs gauge decremented below zero") {}
};

/// Count of jobs currently executing locally.
class JobsGauge {
 public:
  std::int64_t increment() noexcept;
  /// Throws GaugeUnderflow when no increment is outstanding.
  std::int64_t decrement();
  std::int64_t value() const noexcept { return count_.load(); }
  /// Highest value observed since construction.
  std::int64_t peak() const noexcept { return peak_.load(); }

 private:
  std::atomic<std::int64_t> count_{0};
  std::atomic<std::int64_t> peak_{0};
};

enum class SourceKind { Host, Simulated, Replay };

struct MetricsSourceConfig {
  SourceKind kind = SourceKind::Simulated;
  int sample_period_ms = 1000;
  /// EWMA weight of the newest CPU reading; 1 disables smoothing.
  double smoothing_alpha = 1.0;

  void validate() const;
};

/// Base of all metric sources. `sample()` reads the raw values, sanitizes
/// them, applies CPU smoothing and stamps the jobs gauge.
class MetricsSource {
 public:
  explicit MetricsSource(MetricsSourceConfig config);
  virtual ~MetricsSource() = default;

  MetricsSource(const MetricsSource&) = delete;
  MetricsSource& operator=(const MetricsSource&) = delete;

  MetricsSnapshot sample();

  JobsGauge& gauge() noexcept { return gauge_; }
  const JobsGauge& gauge() const noexcept { return gauge_; }
  const MetricsSourceConfig& config() const noexcept { return config_; }

 protected:
  virtual MetricsSnapshot read_raw() = 0;
  /// Replay sources report the scripted job count instead of the gauge.
  virtual bool uses_gauge() const { return true; }

 private:
  MetricsSourceConfig config_;
  JobsGauge gauge_;
  std::mutex ewma_mutex_;
  double ewma_ = 0.0;
};

/// Reads from a caller-supplied probe, e.g. simulator state.
class SimulatedMetrics final : public MetricsSource {
 public:
  using Probe = std::function<MetricsSnapshot()>;
  SimulatedMetrics(Probe probe, MetricsSourceConfig config = {SourceKind::Simulated, 100, 1.0});

 protected:
  MetricsSnapshot read_raw() override { return probe_(); }

 private:
  Probe probe_;
};

/// Scripted metrics: CSV with header
/// `t_ms,mem_util,cpu_util,cpu_temp_c,jobs_in_flight,cpu_freq_mhz`.
class ReplayMetrics final : public MetricsSource {
 public:
  struct Row {
    std::int64_t t_ms;
    double mem_util;
    double cpu_util;
    double cpu_temp_c;
    std::int64_t jobs_in_flight;
    double cpu_freq_mhz;
  };

  ReplayMetrics(std::vector<Row> rows, const Clock& clock,
                MetricsSourceConfig config = {SourceKind::Replay, 100, 1.0});

  /// Parses the replay CSV; throws std::invalid_argument on malformed input.
  static std::vector<Row> parse(std::string_view csv);

 protected:
  MetricsSnapshot read_raw() override;
  bool uses_gauge() const override { return false; }

 private:
  std::vector<Row> rows_;
  const Clock& clock_;
};

/// Cumulative CPU time counters, as exposed by the aggregate /proc/stat line.
struct CpuCounters {
  std::uint64_t busy = 0;
  std::uint64_t idle = 0;
};

struct CpuUtilization {
  double value = 0.0;
  bool valid = true;
};

/// Utilization over the window between two counter readings:
/// busy_delta / (busy_delta + idle_delta). Wrapped (decreasing) counters
/// or an empty window yield an invalid reading clamped into [0, 1].
CpuUtilization cpu_utilization(const CpuCounters& previous, const CpuCounters& current);

/// Parses the first `cpu ` line of /proc/stat.
std::optional<CpuCounters> parse_proc_stat(std::string_view text);

/// (total - available) / total from /proc/meminfo.
std::optional<double> parse_meminfo_utilization(std::string_view text);

struct HostPaths {
  std::filesystem::path proc_stat = "/proc/stat";
  std::filesystem::path meminfo = "/proc/meminfo";
  /// Millidegrees Celsius; EDGEFLOW_THERMAL_PATH overrides.
  std::filesystem::path thermal = "/sys/class/thermal/thermal_zone0/temp";
  /// kHz.
  std::filesystem::path cpu_freq = "/sys/devices/system/cpu/cpu0/cpufreq/scaling_cur_freq";

  /// Defaults with environment overrides applied.
  static HostPaths from_environment();
};

/// Live readings of the machine the process runs on. CPU utilization is
/// measured over the interval since the previous sample.
class HostMetrics final : public MetricsSource {
 public:
  HostMetrics(HostPaths paths, const Clock& clock,
              MetricsSourceConfig config = {SourceKind::Host, 1000, 1.0});

 protected:
  MetricsSnapshot read_raw() override;

 private:
  HostPaths paths_;
  const Clock& clock_;
  std::mutex mutex_;
  std::optional<CpuCounters> last_counters_;
  double last_cpu_ = 0.0;
};

}  // namespace edgeflow
