#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include "edgeflow/metrics.hpp"
#include "edgeflow/sim.hpp"

using namespace edgeflow;

namespace {

MetricsSnapshot good() {
  MetricsSnapshot s;
  s.mem_util = 0.5;
  s.cpu_util = 0.5;
  s.cpu_temp_c = 50.0;
  s.jobs_in_flight = 2;
  s.cpu_freq_mhz = 1200.0;
  return s;
}

bool in_band(const MetricsSnapshot& s) {
  return s.mem_util >= 0.0 && s.mem_util <= 1.0 && s.cpu_util >= 0.0 && s.cpu_util <= 1.0 &&
         s.cpu_temp_c >= kMinTempC && s.cpu_temp_c <= kMaxTempC && s.cpu_freq_mhz > 0.0 && s.jobs_in_flight >= 0;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("edgeflow-metrics-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

std::string proc_stat(std::uint64_t busy, std::uint64_t idle) {
  // user nice system idle iowait irq softirq steal
  return "cpu  " + std::to_string(busy) + " 0 0 " + std::to_string(idle) + " 0 0 0 0 0 0\ncpu0 1 2 3 4\nintr 5\n";
}

}  // namespace

TEST(Sanitize, LeavesGoodSnapshotsUntouched) {
  const auto s = sanitize(good());
  EXPECT_EQ(s, good());
  EXPECT_FALSE(s.degraded());
}

TEST(Sanitize, ClampsAndFlagsEachField) {
  auto s = good();
  s.mem_util = 1.7;
  s.cpu_util = -0.2;
  s.cpu_temp_c = 400.0;
  s.cpu_freq_mhz = 0.0;
  s.jobs_in_flight = -3;
  const auto out = sanitize(s);
  EXPECT_TRUE(in_band(out));
  EXPECT_EQ(out.mem_util, 1.0);
  EXPECT_EQ(out.cpu_util, 0.0);
  EXPECT_EQ(out.cpu_temp_c, kMaxTempC);
  EXPECT_EQ(out.jobs_in_flight, 0);
  EXPECT_FALSE(out.valid.mem);
  EXPECT_FALSE(out.valid.cpu);
  EXPECT_FALSE(out.valid.temp);
  EXPECT_FALSE(out.valid.freq);
}

TEST(Sanitize, NonFiniteValues) {
  auto s = good();
  s.cpu_util = std::numeric_limits<double>::quiet_NaN();
  s.cpu_temp_c = -std::numeric_limits<double>::infinity();
  const auto out = sanitize(s);
  EXPECT_TRUE(in_band(out));
  EXPECT_FALSE(out.valid.cpu);
  EXPECT_FALSE(out.valid.temp);
  EXPECT_TRUE(out.valid.mem);
}

TEST(SanitizeProperty, AlwaysInBand) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> wide(-1e3, 1e3);
  for (int i = 0; i < 5000; ++i) {
    MetricsSnapshot s;
    s.mem_util = wide(rng);
    s.cpu_util = wide(rng);
    s.cpu_temp_c = wide(rng);
    s.cpu_freq_mhz = wide(rng);
    s.jobs_in_flight = std::uniform_int_distribution<std::int64_t>(-10, 10)(rng);
    ASSERT_TRUE(in_band(sanitize(s)));
  }
}

TEST(JobsGauge, IncIncDec) {
  JobsGauge g;
  EXPECT_EQ(g.increment(), 1);
  EXPECT_EQ(g.increment(), 2);
  EXPECT_EQ(g.decrement(), 1);
  EXPECT_EQ(g.value(), 1);
  EXPECT_EQ(g.peak(), 2);
}

TEST(JobsGauge, UnderflowIsAnError) {
  JobsGauge g;
  EXPECT_THROW(g.decrement(), GaugeUnderflow);
  g.increment();
  g.decrement();
  EXPECT_THROW(g.decrement(), GaugeUnderflow);
  EXPECT_EQ(g.value(), 0);
}

TEST(JobsGauge, ConcurrentUpdatesAreExact) {
  JobsGauge g;
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&] {
        for (int i = 0; i < 10000; ++i) {
          g.increment();
          g.decrement();
        }
      });
  }
  EXPECT_EQ(g.value(), 0);
  EXPECT_GE(g.peak(), 1);
  EXPECT_LE(g.peak(), 8);
}

TEST(JobsGauge, FourConcurrentJobs) {
  JobsGauge g;
  for (int i = 0; i < 4; ++i) g.increment();
  EXPECT_EQ(g.value(), 4);
}

TEST(SourceConfig, Validation) {
  EXPECT_NO_THROW((MetricsSourceConfig{SourceKind::Host, 10, 1.0}.validate()));
  EXPECT_THROW((MetricsSourceConfig{SourceKind::Host, 9, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((MetricsSourceConfig{SourceKind::Host, 1000, 1.5}.validate()), std::invalid_argument);
  EXPECT_THROW((MetricsSourceConfig{SourceKind::Host, 1000, -0.1}.validate()), std::invalid_argument);
  EXPECT_THROW(SimulatedMetrics([] { return MetricsSnapshot{}; }, {SourceKind::Simulated, 0, 1.0}),
               std::invalid_argument);
}

TEST(SimulatedMetrics, EwmaHalf) {
  auto s = good();
  s.cpu_util = 1.0;
  SimulatedMetrics m([&] { return s; }, {SourceKind::Simulated, 100, 0.5});
  EXPECT_DOUBLE_EQ(m.sample().cpu_util, 0.5);
  EXPECT_DOUBLE_EQ(m.sample().cpu_util, 0.75);
}

TEST(SimulatedMetrics, StampsTheGauge) {
  SimulatedMetrics m([] { return good(); });
  m.gauge().increment();
  m.gauge().increment();
  m.gauge().increment();
  EXPECT_EQ(m.sample().jobs_in_flight, 3);
}

TEST(SimulatedMetrics, UnchangedGatewayGivesIdenticalSamples) {
  sim::Gateway gw{sim::GatewayModel{}};
  double now = 0.0;
  SimulatedMetrics m([&] {
    MetricsSnapshot s;
    s.cpu_util = gw.cpu_util();
    s.mem_util = gw.model().mem_util(gw.running());
    s.cpu_temp_c = gw.state().temp_c;
    s.cpu_freq_mhz = gw.freq_mhz();
    s.taken_at = now;
    return s;
  });
  const auto a = m.sample();
  now = 1.0;
  auto b = m.sample();
  EXPECT_NE(a.taken_at, b.taken_at);
  b.taken_at = a.taken_at;
  EXPECT_EQ(a, b);
}

TEST(SimulatedMetrics, FullLoadOnFourCores) {
  sim::Gateway gw{sim::GatewayModel{}};
  for (int i = 1; i <= 4; ++i) gw.admit(i, 24.5);
  SimulatedMetrics m([&] {
    MetricsSnapshot s;
    s.cpu_util = gw.cpu_util();
    s.cpu_temp_c = gw.state().temp_c;
    s.cpu_freq_mhz = gw.freq_mhz();
    return s;
  });
  for (int i = 0; i < 4; ++i) m.gauge().increment();
  const auto s = m.sample();
  EXPECT_DOUBLE_EQ(s.cpu_util, 1.0);
  EXPECT_EQ(s.jobs_in_flight, 4);
}

TEST(ReplayMetrics, PassthroughAndLookup) {
  const auto rows = ReplayMetrics::parse(
      "t_ms,mem_util,cpu_util,cpu_temp_c,jobs_in_flight,cpu_freq_mhz\n"
      "1000,0.5,0.75,70.0,3,1200\r\n"
      "\n"
      "3000, 0.6 ,0.25,81.5,1,900\n");
  ASSERT_EQ(rows.size(), 2u);
  ManualClock clock;
  ReplayMetrics m(rows, clock);

  clock.set(0.5);
  auto s = m.sample();
  EXPECT_TRUE(s.degraded());
  EXPECT_TRUE(in_band(s));

  clock.set(1.0);
  s = m.sample();
  EXPECT_FALSE(s.degraded());
  EXPECT_EQ(s.mem_util, 0.5);
  EXPECT_EQ(s.cpu_util, 0.75);
  EXPECT_EQ(s.cpu_temp_c, 70.0);
  EXPECT_EQ(s.jobs_in_flight, 3);
  EXPECT_EQ(s.cpu_freq_mhz, 1200.0);
  EXPECT_EQ(s.taken_at, 1.0);

  clock.set(2.999);
  EXPECT_EQ(m.sample().cpu_temp_c, 70.0);
  clock.set(3.0);
  EXPECT_EQ(m.sample().cpu_temp_c, 81.5);
  clock.set(1e6);
  EXPECT_EQ(m.sample().jobs_in_flight, 1);
}

TEST(ReplayMetrics, ReportsScriptedJobsNotGauge) {
  ManualClock clock(1.0);
  ReplayMetrics m({{0, 0.1, 0.1, 40.0, 7, 600}}, clock);
  m.gauge().increment();
  EXPECT_EQ(m.sample().jobs_in_flight, 7);
}

TEST(ReplayMetrics, OutOfBandRowsAreClampedAndFlagged) {
  ManualClock clock(1.0);
  ReplayMetrics m({{0, 1.5, 0.2, 300.0, 1, 1200}}, clock);
  const auto s = m.sample();
  EXPECT_TRUE(in_band(s));
  EXPECT_FALSE(s.valid.mem);
  EXPECT_FALSE(s.valid.temp);
  EXPECT_TRUE(s.valid.cpu);
}

TEST(ReplayMetrics, MalformedScripts) {
  EXPECT_THROW(ReplayMetrics::parse(""), std::invalid_argument);
  EXPECT_THROW(ReplayMetrics::parse("t,mem\n1,2\n"), std::invalid_argument);
  const std::string header = "t_ms,mem_util,cpu_util,cpu_temp_c,jobs_in_flight,cpu_freq_mhz\n";
  EXPECT_THROW(ReplayMetrics::parse(header + "0,0.5,0.5,50\n"), std::invalid_argument);
  EXPECT_THROW(ReplayMetrics::parse(header + "0,0.5,x,50,1,1200\n"), std::invalid_argument);
  EXPECT_THROW(ReplayMetrics::parse(header + "0.5,0.5,0.5,50,1,1200\n"), std::invalid_argument);
  EXPECT_TRUE(ReplayMetrics::parse(header).empty());
}

TEST(CpuUtilization, Window) {
  const auto u = cpu_utilization({100, 300}, {175, 325});
  EXPECT_TRUE(u.valid);
  EXPECT_DOUBLE_EQ(u.value, 0.75);
}

TEST(CpuUtilization, WrappedOrEmptyWindowIsFlagged) {
  auto u = cpu_utilization({100, 300}, {50, 400});
  EXPECT_FALSE(u.valid);
  EXPECT_GE(u.value, 0.0);
  EXPECT_LE(u.value, 1.0);
  u = cpu_utilization({100, 300}, {100, 300});
  EXPECT_FALSE(u.valid);
}

TEST(CpuUtilization, SyntheticCounterScript) {
  // 4 cores at 100 ticks/s sampled every w seconds: total ticks per window
  // is w * cores * 100, so utilization is busy_delta / (w * cores * 100).
  const int cores = 4;
  const double hz = 100.0;
  std::mt19937_64 rng(8);
  CpuCounters c{1000, 5000};
  for (int i = 0; i < 200; ++i) {
    const double w = std::uniform_int_distribution<int>(1, 30)(rng) / 10.0;
    const auto window = static_cast<std::uint64_t>(std::llround(w * cores * hz));
    const auto busy = std::uniform_int_distribution<std::uint64_t>(0, window)(rng);
    const CpuCounters next{c.busy + busy, c.idle + (window - busy)};
    const auto u = cpu_utilization(c, next);
    ASSERT_TRUE(u.valid);
    EXPECT_NEAR(u.value, static_cast<double>(busy) / (w * cores * hz), 1e-12);
    c = next;
  }
}

TEST(ProcParsing, ProcStat) {
  const auto c = parse_proc_stat("cpu  10 20 30 400 50 6 7 8 0 0\ncpu0 1 1 1 1\n");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->busy, 10u + 20 + 30 + 6 + 7 + 8);
  EXPECT_EQ(c->idle, 450u);
  EXPECT_TRUE(parse_proc_stat("cpu 1 2 3 4\n"));
  EXPECT_FALSE(parse_proc_stat("cpu 1 2\n"));
  EXPECT_FALSE(parse_proc_stat("intr 1 2 3\n"));
}

TEST(ProcParsing, Meminfo) {
  const auto u = parse_meminfo_utilization("MemTotal: 1000 kB\nMemFree: 100 kB\nMemAvailable: 250 kB\n");
  ASSERT_TRUE(u);
  EXPECT_DOUBLE_EQ(*u, 0.75);
  EXPECT_FALSE(parse_meminfo_utilization("MemTotal: 1000 kB\n"));
  EXPECT_FALSE(parse_meminfo_utilization(""));
}

TEST(HostMetrics, ReadsConfiguredFiles) {
  TempDir dir;
  HostPaths paths;
  paths.proc_stat = dir.write("stat", proc_stat(100, 900));
  paths.meminfo = dir.write("meminfo", "MemTotal: 2000 kB\nMemAvailable: 500 kB\n");
  paths.thermal = dir.write("temp", "61500\n");
  paths.cpu_freq = dir.write("freq", "1200000\n");
  ManualClock clock(2.0);
  HostMetrics m(paths, clock);

  auto s = m.sample();
  EXPECT_FALSE(s.degraded());
  EXPECT_DOUBLE_EQ(s.mem_util, 0.75);
  EXPECT_DOUBLE_EQ(s.cpu_temp_c, 61.5);
  EXPECT_DOUBLE_EQ(s.cpu_freq_mhz, 1200.0);
  EXPECT_EQ(s.cpu_util, 0.0);
  EXPECT_EQ(s.taken_at, 2.0);

  dir.write("stat", proc_stat(400, 1000));
  s = m.sample();
  EXPECT_DOUBLE_EQ(s.cpu_util, 0.75);

  dir.write("stat", proc_stat(10, 10));
  s = m.sample();
  EXPECT_FALSE(s.valid.cpu);
  EXPECT_DOUBLE_EQ(s.cpu_util, 0.75);
}

TEST(HostMetrics, MissingFilesGiveDegradedSnapshot) {
  HostPaths paths;
  paths.proc_stat = "/nonexistent/stat";
  paths.meminfo = "/nonexistent/meminfo";
  paths.thermal = "/nonexistent/temp";
  paths.cpu_freq = "/nonexistent/freq";
  ManualClock clock;
  HostMetrics m(paths, clock);
  const auto s = m.sample();
  EXPECT_TRUE(in_band(s));
  EXPECT_FALSE(s.valid.mem);
  EXPECT_FALSE(s.valid.cpu);
  EXPECT_FALSE(s.valid.temp);
  EXPECT_FALSE(s.valid.freq);
}

TEST(HostMetrics, ThermalPathFromEnvironment) {
  TempDir dir;
  const auto file = dir.write("zone", "47000");
  ::setenv("EDGEFLOW_THERMAL_PATH", file.c_str(), 1);
  const auto paths = HostPaths::from_environment();
  ::unsetenv("EDGEFLOW_THERMAL_PATH");
  EXPECT_EQ(paths.thermal, file);
  EXPECT_EQ(HostPaths::from_environment().thermal, HostPaths{}.thermal);

  ManualClock clock;
  HostMetrics m(paths, clock);
  EXPECT_DOUBLE_EQ(m.sample().cpu_temp_c, 47.0);
}
