#include <chrono>
#include <condition_variable>
#include <thread>

#include "edgeflow/bench.hpp"

namespace edgeflow::bench {

namespace {

struct HostRun {
  std::vector<JobRecord> records;
  std::vector<sim::SeriesRow> series;
  std::optional<double> onset_s;
  double end_time_s = 0.0;
  double max_temp_c = 0.0;
};

HostRun run_host(const BenchConfig& config, const FlowGraph& source, const std::string& policy,
                 const sim::WorkloadSpec& workload) {
  workload.validate();
  const HostSettings& h = config.host;
  const FlowGraph flow = source.nodes.empty() ? sim::canonical_flow(config.gateway.base_job_work) : source;
  const RewriteResult rewrite = extract_offloadable(flow, h.remote_url, policy);

  SteadyClock clock;
  auto pool = std::make_unique<ThreadPool>(static_cast<std::size_t>(h.worker_threads));
  HostMetrics metrics(HostPaths::from_environment(), clock, {SourceKind::Host, h.sample_period_ms, h.smoothing_alpha});

  const NodeRegistry base = NodeRegistry::standard(h.rounds_per_unit);
  auto runner = std::make_shared<remote::FlowRunner>(rewrite.remote_flow, base, EngineOptions{&clock, pool.get(), {}});

  std::shared_ptr<remote::Transport> transport;
  if (parse_policy(policy).kind != PolicyKind::AlwaysLocal) {
    remote::RemoteEndpoint endpoint{h.remote_url, h.connect_timeout_ms, h.request_timeout_ms, h.fallback};
    transport = std::make_shared<remote::HttpTransport>(endpoint);
    transport->deploy(rewrite.remote_flow);
  }

  NodeRegistry registry = base;
  remote::OffloadContext context;
  context.transport_for = [transport](const std::string&) { return transport; };
  context.metrics = &metrics;
  context.local_runner_for = [runner](const std::string&) { return runner; };
  context.fallback = h.fallback;
  remote::install_offload_link(registry, std::move(context));

  std::mutex mutex;
  std::condition_variable cv;
  int finished = 0;
  const double start = clock.now();
  Engine engine(rewrite.local_flow, registry, EngineOptions{&clock, pool.get(), [&](const JobRecord&) {
                                                              {
                                                                std::lock_guard lock(mutex);
                                                                ++finished;
                                                              }
                                                              cv.notify_all();
                                                            }});

  HostRun run;
  std::jthread sampler([&](std::stop_token stop) {
    const auto period = std::chrono::milliseconds(h.sample_period_ms);
    while (!stop.stop_requested()) {
      const MetricsSnapshot s = metrics.sample();
      {
        std::lock_guard lock(mutex);
        const double t = clock.now() - start;
        run.series.push_back({t, s.cpu_temp_c, s.cpu_freq_mhz, s.cpu_util, metrics.gauge().value()});
        run.max_temp_c = std::max(run.max_temp_c, s.cpu_temp_c);
        if (!run.onset_s && s.valid.temp && s.cpu_temp_c >= config.gateway.t_limit_c) run.onset_s = t;
      }
      std::this_thread::sleep_for(period);
    }
  });

  const int total = workload.total_jobs;
  if (workload.mode == sim::WorkloadMode::ClosedLoop) {
    int injected = 0;
    for (; injected < std::min(*workload.parallelism, total); ++injected) engine.inject({});
    while (injected < total) {
      std::unique_lock lock(mutex);
      cv.wait(lock, [&] { return injected - finished < *workload.parallelism; });
      lock.unlock();
      engine.inject({});
      ++injected;
    }
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < total; ++i) {
      std::this_thread::sleep_until(t0 + std::chrono::duration<double>(i * *workload.inter_arrival_s * h.time_scale));
      engine.inject({});
    }
  }
  run.records = engine.drain(std::chrono::milliseconds(static_cast<long long>(config.sim.max_time_s * 1000.0)));
  sampler.request_stop();
  sampler.join();
  pool.reset();
  run.end_time_s = clock.now() - start;
  for (auto& r : run.records) {
    r.started_at -= start;
    r.finished_at -= start;
  }
  return run;
}

}  // namespace

CharacterizeReport characterize_host(const BenchConfig& config, const FlowGraph& flow) {
  config.validate();
  const auto& s = config.characterize;
  HostRun run = run_host(config, flow, s.policy, sim::WorkloadSpec::closed_loop(s.parallelism, s.total_jobs, s.seed));
  CharacterizeReport report;
  report.phases = phase_stats(run.records, run.onset_s, config.checks);
  report.records = std::move(run.records);
  report.series = std::move(run.series);
  report.end_time_s = run.end_time_s;
  report.max_temp_c = run.max_temp_c;
  report.checks = characterize_checks(report.phases, config.checks);
  return report;
}

CompareReport compare_host(const BenchConfig& config, const FlowGraph& flow) {
  config.validate();
  const auto& s = config.compare;
  CompareReport report;
  for (const auto& strategy : s.strategies) {
    HostRun run = run_host(config, flow, strategy, sim::WorkloadSpec::open_loop(s.inter_arrival_s, s.total_jobs, s.seed));
    StrategyRow row;
    row.strategy = strategy;
    row.stats = stats(run.records);
    row.onset_s = run.onset_s;
    row.records = std::move(run.records);
    row.series = std::move(run.series);
    report.rows.push_back(std::move(row));
  }
  report.checks = compare_checks(report.rows, config.checks);
  return report;
}

}  // namespace edgeflow::bench
