#include "edgeflow/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace edgeflow {

MetricsSnapshot sanitize(MetricsSnapshot s) {
  auto clamp_field = [](double& value, double lo, double hi, bool& valid) {
    if (!std::isfinite(value)) {
      value = lo;
      valid = false;
    } else if (value < lo || value > hi) {
      value = std::clamp(value, lo, hi);
      valid = false;
    }
  };
  clamp_field(s.mem_util, 0.0, 1.0, s.valid.mem);
  clamp_field(s.cpu_util, 0.0, 1.0, s.valid.cpu);
  clamp_field(s.cpu_temp_c, kMinTempC, kMaxTempC, s.valid.temp);
  if (!std::isfinite(s.cpu_freq_mhz) || s.cpu_freq_mhz <= 0.0) {
    s.cpu_freq_mhz = 1.0;
    s.valid.freq = false;
  }
  if (s.jobs_in_flight < 0) s.jobs_in_flight = 0;
  return s;
}

std::int64_t JobsGauge::increment() noexcept {
  const std::int64_t now = ++count_;
  std::int64_t seen = peak_.load();
  while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
  }
  return now;
}

std::int64_t JobsGauge::decrement() {
  std::int64_t current = count_.load();
  do {
    if (current <= 0) throw GaugeUnderflow();
  } while (!count_.compare_exchange_weak(current, current - 1));
  return current - 1;
}

void MetricsSourceConfig::validate() const {
  if (sample_period_ms < 10) throw std::invalid_argument("sample_period_ms must be >= 10");
  if (!(smoothing_alpha >= 0.0 && smoothing_alpha <= 1.0))
    throw std::invalid_argument("smoothing_alpha must be within [0, 1]");
}

MetricsSource::MetricsSource(MetricsSourceConfig config) : config_(config) { config_.validate(); }

MetricsSnapshot MetricsSource::sample() {
  MetricsSnapshot s = sanitize(read_raw());
  if (uses_gauge()) s.jobs_in_flight = gauge_.value();
  if (config_.smoothing_alpha < 1.0) {
    std::lock_guard lock(ewma_mutex_);
    ewma_ = config_.smoothing_alpha * s.cpu_util + (1.0 - config_.smoothing_alpha) * ewma_;
    s.cpu_util = ewma_;
  }
  return s;
}

SimulatedMetrics::SimulatedMetrics(Probe probe, MetricsSourceConfig config)
    : MetricsSource(config), probe_(std::move(probe)) {}

// --- replay ---------------------------------------------------------------

ReplayMetrics::ReplayMetrics(std::vector<Row> rows, const Clock& clock, MetricsSourceConfig config)
    : MetricsSource(config), rows_(std::move(rows)), clock_(clock) {
  std::stable_sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) { return a.t_ms < b.t_ms; });
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("replay script line " + std::to_string(line) + ": bad field '" +
                                std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::vector<ReplayMetrics::Row> ReplayMetrics::parse(std::string_view csv) {
  static constexpr std::string_view kHeader = "t_ms,mem_util,cpu_util,cpu_temp_c,jobs_in_flight,cpu_freq_mhz";
  std::vector<Row> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!csv.empty()) {
    std::size_t nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv.remove_prefix(nl == std::string_view::npos ? csv.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) throw std::invalid_argument("replay script must start with header '" + std::string(kHeader) + "'");
      header_seen = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != 6) throw std::invalid_argument("replay script line " + std::to_string(line_no) + ": expected 6 fields");
    rows.push_back(Row{parse_field<std::int64_t>(f[0], line_no), parse_field<double>(f[1], line_no),
                       parse_field<double>(f[2], line_no), parse_field<double>(f[3], line_no),
                       parse_field<std::int64_t>(f[4], line_no), parse_field<double>(f[5], line_no)});
  }
  if (!header_seen) throw std::invalid_argument("empty replay script");
  return rows;
}

MetricsSnapshot ReplayMetrics::read_raw() {
  const double t = clock_.now();
  const auto t_ms = static_cast<std::int64_t>(std::floor(t * 1000.0 + 1e-6));
  auto it = std::upper_bound(rows_.begin(), rows_.end(), t_ms, [](std::int64_t v, const Row& r) { return v < r.t_ms; });
  MetricsSnapshot s;
  s.taken_at = t;
  if (it == rows_.begin()) {
    s.valid = {false, false, false, false};
    s.cpu_freq_mhz = 1.0;
    return s;
  }
  const Row& r = *std::prev(it);
  s.mem_util = r.mem_util;
  s.cpu_util = r.cpu_util;
  s.cpu_temp_c = r.cpu_temp_c;
  s.jobs_in_flight = r.jobs_in_flight;
  s.cpu_freq_mhz = r.cpu_freq_mhz;
  return s;
}

// --- host -------------------------------------------------------------------

CpuUtilization cpu_utilization(const CpuCounters& prev, const CpuCounters& cur) {
  if (cur.busy < prev.busy || cur.idle < prev.idle) return {0.0, false};
  const double busy = static_cast<double>(cur.busy - prev.busy);
  const double total = busy + static_cast<double>(cur.idle - prev.idle);
  if (total <= 0.0) return {0.0, false};
  return {std::clamp(busy / total, 0.0, 1.0), true};
}

std::optional<CpuCounters> parse_proc_stat(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string label;
  while (in >> label) {
    if (label == "cpu") {
      // user nice system idle iowait irq softirq steal
      std::uint64_t v[8] = {};
      for (int i = 0; i < 8; ++i) {
        if (!(in >> v[i])) {
          if (i < 4) return std::nullopt;
          break;
        }
      }
      CpuCounters c;
      c.busy = v[0] + v[1] + v[2] + v[5] + v[6] + v[7];
      c.idle = v[3] + v[4];
      return c;
    }
    std::string rest;
    std::getline(in, rest);
  }
  return std::nullopt;
}

std::optional<double> parse_meminfo_utilization(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string key;
  double total = -1.0, available = -1.0, value = 0.0;
  std::string unit;
  while (in >> key >> value) {
    std::getline(in, unit);
    if (key == "MemTotal:") total = value;
    else if (key == "MemAvailable:") available = value;
  }
  if (total <= 0.0 || available < 0.0) return std::nullopt;
  return (total - available) / total;
}

HostPaths HostPaths::from_environment() {
  HostPaths p;
  if (const char* thermal = std::getenv("EDGEFLOW_THERMAL_PATH"); thermal && *thermal) p.thermal = thermal;
  return p;
}

HostMetrics::HostMetrics(HostPaths paths, const Clock& clock, MetricsSourceConfig config)
    : MetricsSource(config), paths_(std::move(paths)), clock_(clock) {}

namespace {

std::optional<std::string> slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<double> read_scaled(const std::filesystem::path& p, double scale) {
  auto text = slurp(p);
  if (!text) return std::nullopt;
  try {
    return std::stod(*text) * scale;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

MetricsSnapshot HostMetrics::read_raw() {
  MetricsSnapshot s;
  s.taken_at = clock_.now();

  std::optional<double> mem;
  if (auto text = slurp(paths_.meminfo)) mem = parse_meminfo_utilization(*text);
  if (mem) s.mem_util = *mem;
  else s.valid.mem = false;

  {
    std::lock_guard lock(mutex_);
    std::optional<CpuCounters> counters;
    if (auto text = slurp(paths_.proc_stat)) counters = parse_proc_stat(*text);
    if (!counters) {
      s.valid.cpu = false;
      s.cpu_util = last_cpu_;
    } else if (!last_counters_) {
      last_counters_ = counters;
      s.cpu_util = 0.0;  // no window yet
    } else {
      CpuUtilization u = cpu_utilization(*last_counters_, *counters);
      last_counters_ = counters;
      s.cpu_util = u.valid ? u.value : last_cpu_;
      s.valid.cpu = u.valid;
      if (u.valid) last_cpu_ = u.value;
    }
  }

  if (auto temp = read_scaled(paths_.thermal, 1e-3)) s.cpu_temp_c = *temp;
  else s.valid.temp = false;
  if (auto freq = read_scaled(paths_.cpu_freq, 1e-3)) s.cpu_freq_mhz = *freq;
  else s.valid.freq = false;
  return s;
}

}  // namespace edgeflow
