#include "edgeflow/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace edgeflow::bench {

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const StrategyRow* find_row(const std::vector<StrategyRow>& rows, const std::string& strategy) {
  for (const auto& row : rows)
    if (row.strategy == strategy) return &row;
  return nullptr;
}

}  // namespace

bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

PhaseStats phase_stats(const std::vector<JobRecord>& records, std::optional<double> onset_s,
                       const CheckThresholds& band) {
  PhaseStats p;
  p.onset_s = onset_s;
  double pre_sum = 0.0, post_sum = 0.0;
  for (const auto& r : records) {
    if (r.location != Location::Local || !r.complete || !r.success) continue;
    if (!onset_s || r.finished_at < *onset_s) {
      p.pre_min_s = p.pre_count == 0 ? r.duration_s : std::min(p.pre_min_s, r.duration_s);
      p.pre_max_s = std::max(p.pre_max_s, r.duration_s);
      pre_sum += r.duration_s;
      ++p.pre_count;
      if (r.duration_s >= band.pre_band_lo_s && r.duration_s <= band.pre_band_hi_s) ++p.pre_in_band;
    } else if (r.started_at >= *onset_s) {
      post_sum += r.duration_s;
      ++p.post_count;
    }
  }
  if (p.pre_count) p.pre_mean_s = pre_sum / static_cast<double>(p.pre_count);
  if (p.post_count) p.post_mean_s = post_sum / static_cast<double>(p.post_count);
  return p;
}

std::vector<CheckResult> characterize_checks(const PhaseStats& p, const CheckThresholds& t) {
  std::vector<CheckResult> out;
  const double share = p.pre_count ? static_cast<double>(p.pre_in_band) / static_cast<double>(p.pre_count) : 0.0;
  out.push_back({"pre-throttle band", p.pre_count > 0 && share >= t.pre_band_min_share,
                 format("%zu/%zu pre-throttle jobs in [%.1f, %.1f] s (need %.0f%%)", p.pre_in_band, p.pre_count,
                        t.pre_band_lo_s, t.pre_band_hi_s, 100.0 * t.pre_band_min_share)});
  out.push_back({"throttle onset", p.onset_s && std::abs(*p.onset_s - t.onset_s) <= t.onset_tol_s,
                 p.onset_s ? format("onset %.1f s, expected %.0f +/- %.0f s", *p.onset_s, t.onset_s, t.onset_tol_s)
                           : std::string("gateway never reached its temperature limit")});
  out.push_back({"post-throttle mean", p.post_count > 0 && std::abs(p.post_mean_s - t.post_mean_s) <= t.post_mean_tol_s,
                 format("mean %.3f s over %zu jobs, expected %.1f +/- %.1f s", p.post_mean_s, p.post_count,
                        t.post_mean_s, t.post_mean_tol_s)});
  return out;
}

std::vector<CheckResult> compare_checks(const std::vector<StrategyRow>& rows, const CheckThresholds& t) {
  std::vector<CheckResult> out;
  for (const auto& row : rows) {
    auto it = t.local_fraction.find(row.strategy);
    if (it == t.local_fraction.end()) continue;
    const double diff = row.stats.local_fraction - it->second;
    out.push_back({"local fraction " + row.strategy, std::abs(diff) <= t.local_fraction_tol + 1e-12,
                   format("%.1f%% vs reference %.1f%% (tolerance %.0f points)", 100.0 * row.stats.local_fraction,
                          100.0 * it->second, 100.0 * t.local_fraction_tol)});
  }

  auto extreme = [&](const std::string& name, const std::string& strategy, auto value, bool lowest) {
    const StrategyRow* target = find_row(rows, strategy);
    if (!target || rows.size() < 2) return;
    bool pass = true;
    for (const auto& row : rows) {
      if (&row == target) continue;
      if (lowest ? !(value(*target) < value(row)) : !(value(*target) > value(row))) pass = false;
    }
    out.push_back({name, pass, format("%s: %.3f", strategy.c_str(), value(*target))});
  };
  auto max_duration = [](const StrategyRow& r) { return r.stats.max_local_duration_s; };
  auto local_fraction = [](const StrategyRow& r) { return r.stats.local_fraction; };
  extreme("lowest max local duration", t.lowest_max_duration, max_duration, true);
  extreme("highest max local duration", t.highest_max_duration, max_duration, false);
  extreme("lowest local fraction", t.lowest_local_fraction, local_fraction, true);
  return out;
}

CharacterizeReport characterize_sim(const BenchConfig& config) {
  config.validate();
  const auto& s = config.characterize;
  auto result = sim::simulate(config.gateway, sim::WorkloadSpec::closed_loop(s.parallelism, s.total_jobs, s.seed),
                              parse_policy(s.policy), config.remote, config.sim);
  if (result.truncated)
    throw std::runtime_error(format("simulation did not finish within %.0f s of virtual time", config.sim.max_time_s));
  CharacterizeReport report;
  report.phases = phase_stats(result.records, result.throttle_onset_s, config.checks);
  report.records = std::move(result.records);
  report.series = std::move(result.series);
  report.end_time_s = result.end_time_s;
  report.max_temp_c = result.max_temp_c;
  report.checks = characterize_checks(report.phases, config.checks);
  return report;
}

CompareReport compare_sim(const BenchConfig& config) {
  config.validate();
  const auto& s = config.compare;
  sim::GatewayModel model = config.gateway;
  if (s.initial_temp_c) model.initial_temp_c = s.initial_temp_c;
  const auto workload = sim::WorkloadSpec::open_loop(s.inter_arrival_s, s.total_jobs, s.seed);

  CompareReport report;
  for (const auto& strategy : s.strategies) {
    auto result = sim::simulate(model, workload, parse_policy(strategy), config.remote, config.sim);
    if (result.truncated)
      throw std::runtime_error("strategy " + strategy + ": simulation did not finish within the time guard");
    StrategyRow row;
    row.strategy = strategy;
    row.stats = stats(result.records);
    row.onset_s = result.throttle_onset_s;
    row.records = std::move(result.records);
    row.series = std::move(result.series);
    report.rows.push_back(std::move(row));
  }
  report.checks = compare_checks(report.rows, config.checks);
  return report;
}

std::string summary_text(const CharacterizeReport& r) {
  const PhaseStats& p = r.phases;
  std::size_t local = 0;
  for (const auto& rec : r.records)
    if (rec.location == Location::Local) ++local;
  std::string out;
  out += format("jobs: %zu (local %zu)\n", r.records.size(), local);
  out += format("pre-throttle: %zu jobs, %zu in band, min %.3f s, max %.3f s, mean %.3f s\n", p.pre_count,
                p.pre_in_band, p.pre_min_s, p.pre_max_s, p.pre_mean_s);
  out += p.onset_s ? format("throttle onset: %.1f s\n", *p.onset_s) : std::string("throttle onset: none\n");
  out += format("post-throttle: %zu jobs, mean %.3f s\n", p.post_count, p.post_mean_s);
  out += format("max temperature: %.3f C\n", r.max_temp_c);
  out += format("end time: %.1f s\n", r.end_time_s);
  return out;
}

std::string compare_table(const CompareReport& report) {
  std::size_t width = 8;
  for (const auto& row : report.rows) width = std::max(width, row.strategy.size());
  std::string out = format("%-*s  %12s  %16s  %16s\n", static_cast<int>(width), "strategy", "local_jobs_%",
                           "avg_duration_s", "max_duration_s");
  for (const auto& row : report.rows) {
    const auto& s = row.stats;
    if (s.local_count == 0) {
      out += format("%-*s  %12.1f  %16s  %16s\n", static_cast<int>(width), row.strategy.c_str(),
                    100.0 * s.local_fraction, "no local jobs", "no local jobs");
    } else {
      out += format("%-*s  %12.1f  %16.3f  %16.3f\n", static_cast<int>(width), row.strategy.c_str(),
                    100.0 * s.local_fraction, s.avg_local_duration_s, s.max_local_duration_s);
    }
  }
  return out;
}

std::string compare_csv(const CompareReport& report) {
  std::string out =
      "strategy,jobs,local_jobs,local_pct,avg_local_duration_s,max_local_duration_s,success_ratio,throttle_onset_s\n";
  for (const auto& row : report.rows) {
    const auto& s = row.stats;
    out += format("%s,%zu,%zu,%.3f,", row.strategy.c_str(), s.jobs_total, s.local_count, 100.0 * s.local_fraction);
    out += s.local_count ? format("%.3f,%.3f,", s.avg_local_duration_s, s.max_local_duration_s) : std::string(",,");
    out += format("%.3f,", s.success_ratio);
    out += row.onset_s ? format("%.1f\n", *row.onset_s) : std::string("\n");
  }
  return out;
}

std::string checks_text(const std::vector<CheckResult>& checks) {
  std::string out;
  for (const auto& c : checks) out += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
  return out;
}

std::string strategy_slug(std::string_view strategy) {
  std::string out;
  for (char c : strategy) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_characterize(const CharacterizeReport& report, const std::filesystem::path& out_dir) {
  write_atomic(out_dir / "jobs.csv", records_to_csv(report.records));
  write_atomic(out_dir / "timeseries.csv", sim::series_to_csv(report.series));
  write_atomic(out_dir / "summary.txt", summary_text(report) + checks_text(report.checks));
}

void write_compare(const CompareReport& report, const std::filesystem::path& out_dir) {
  for (const auto& row : report.rows) {
    const auto dir = out_dir / strategy_slug(row.strategy);
    write_atomic(dir / "jobs.csv", records_to_csv(row.records));
    write_atomic(dir / "timeseries.csv", sim::series_to_csv(row.series));
  }
  write_atomic(out_dir / "comparison.csv", compare_csv(report));
  write_atomic(out_dir / "report.txt", compare_table(report) + checks_text(report.checks));
}

}  // namespace edgeflow::bench
