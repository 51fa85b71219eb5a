#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>

#include "edgeflow/metrics.hpp"
#include "edgeflow/remote.hpp"
#include "edgeflow/sim.hpp"
#include "edgeflow/work.hpp"

namespace edgeflow::sim {

namespace {

constexpr std::string_view kSimRemoteUrl = "sim://remote";

struct Event {
  double at;
  std::uint64_t seq;
  std::function<void()> fire;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const { return a.at != b.at ? a.at > b.at : a.seq > b.seq; }
};

class EventQueue {
 public:
  void push(double at, std::function<void()> fire) { queue_.push({at, seq_++, std::move(fire)}); }

  /// Removes and returns every event due at or before `t`, in order.
  std::vector<Event> pop_until(double t) {
    std::vector<Event> out;
    while (!queue_.empty() && queue_.top().at <= t) {
      out.push_back(queue_.top());
      queue_.pop();
    }
    return out;
  }

 private:
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
};

/// Holds local work on the virtual gateway until it has received its share
/// of CPU time.
class SimWorkHandler final : public NodeHandler {
 public:
  struct Waiting {
    Message message;
    Emit emit;
  };

  SimWorkHandler(const FlowNode& node, Gateway& gateway, const std::vector<double>& jitter,
                 std::map<JobId, Waiting>& waiting)
      : node_(node), gateway_(gateway), jitter_(jitter), waiting_(waiting) {}

  void on_message(Message message, Emit emit) override {
    double work = std::stod(node_.get(config_keys::work_units).value_or("0"));
    const auto index = message.job_id - 1;
    if (index >= 0 && static_cast<std::size_t>(index) < jitter_.size()) work += jitter_[index];
    message.payload = apply_work(std::move(message.payload), node_, 1);
    const JobId id = message.job_id;
    waiting_.emplace(id, Waiting{std::move(message), std::move(emit)});
    gateway_.admit(id, work);
  }

 private:
  const FlowNode& node_;
  Gateway& gateway_;
  const std::vector<double>& jitter_;
  std::map<JobId, Waiting>& waiting_;
};

/// Runs offloaded jobs on an in-process executor and reports them done after
/// the modelled service time and round trip.
class SimTransport final : public remote::Transport {
 public:
  SimTransport(remote::RemoteExecutor& executor, EventQueue& events, const Clock& clock, RemoteModel model)
      : executor_(executor), events_(events), clock_(clock), model_(model) {}

  std::string deploy(const FlowGraph& flow) override {
    auto outcome = executor_.deploy(flow);
    if (!outcome.ok())
      throw remote::RemoteError({remote::FailureKind::Rejected, "remote flow failed validation", outcome.violations});
    return outcome.flow_id;
  }

  void execute(const remote::OffloadRequest& request, std::function<void(remote::ExecuteResult)> done) override {
    remote::OffloadResponse response = executor_.execute(request);
    if (response.status == remote::ResponseStatus::Ok) response.remote_duration_s = model_.service_time_s;
    events_.push(clock_.now() + model_.service_time_s + model_.rtt_s,
                 [done = std::move(done), response = std::move(response)]() mutable { done(std::move(response)); });
  }

 private:
  remote::RemoteExecutor& executor_;
  EventQueue& events_;
  const Clock& clock_;
  RemoteModel model_;
};

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

}  // namespace

std::vector<double> job_jitter(std::uint64_t seed, int jobs, double jitter) {
  // splitmix64 stream; 53-bit uniforms.
  std::uint64_t state = seed;
  auto next = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(jobs, 0)));
  for (int i = 0; i < jobs; ++i) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    out.push_back((2.0 * u - 1.0) * jitter);
  }
  return out;
}

FlowGraph canonical_flow(double work_units) {
  FlowGraph g;
  g.tabs = {{"main", "Main", false}, {"tab-ocr", "OCR", true}};
  g.nodes = {
      {"in", "main", std::string(kinds::inject), {}},
      {"to-ocr", "main", std::string(kinds::link_out), {{"target", "ocr-in"}}},
      {"ocr-in", "tab-ocr", std::string(kinds::link_in), {}},
      {"ocr", "tab-ocr", std::string(kinds::work), {{"work_units", format_number(work_units)}}},
      {"ocr-out", "tab-ocr", std::string(kinds::link_out), {{"target", "back"}}},
      {"back", "main", std::string(kinds::link_in), {}},
      {"out", "main", std::string(kinds::sink), {}},
  };
  g.wires = {{"in", "to-ocr"}, {"ocr-in", "ocr"}, {"ocr", "ocr-out"}, {"back", "out"}};
  return g;
}

SimResult simulate(const GatewayModel& model, const WorkloadSpec& workload, const PolicySpec& policy,
                   const RemoteModel& remote_model, const SimOptions& options) {
  model.validate();
  workload.validate();
  remote_model.validate();
  check_policy(policy);
  if (!(options.dt_s > 0.0)) throw std::invalid_argument("dt_s must be > 0");
  if (!(options.max_time_s > 0.0)) throw std::invalid_argument("max_time_s must be > 0");

  ManualClock clock;
  Gateway gateway(model);
  EventQueue events;
  const std::vector<double> jitter = job_jitter(workload.seed, workload.total_jobs, model.duration_jitter);
  std::map<JobId, SimWorkHandler::Waiting> waiting;

  const RewriteResult rewrite =
      extract_offloadable(canonical_flow(model.base_job_work), kSimRemoteUrl, to_string(policy));

  NodeRegistry sim_registry = NodeRegistry::standard(1);
  sim_registry.add(std::string(kinds::work), [&](const HandlerContext& ctx) -> std::unique_ptr<NodeHandler> {
    return std::make_unique<SimWorkHandler>(ctx.node, gateway, jitter, waiting);
  });

  remote::RemoteExecutor executor(NodeRegistry::standard(1));
  auto transport = std::make_shared<SimTransport>(executor, events, clock, remote_model);
  transport->deploy(rewrite.remote_flow);

  SimulatedMetrics metrics([&] {
    MetricsSnapshot s;
    s.mem_util = model.mem_util(gateway.running());
    s.cpu_util = gateway.cpu_util();
    s.cpu_temp_c = std::clamp(gateway.state().temp_c, kMinTempC, kMaxTempC);
    // a gated clock reports its lowest nominal level
    s.cpu_freq_mhz = std::max(gateway.freq_mhz(), model.freq_levels_mhz.back());
    s.taken_at = clock.now();
    return s;
  });

  auto local_runner = std::make_shared<remote::FlowRunner>(rewrite.remote_flow, sim_registry, EngineOptions{&clock, nullptr, {}});
  NodeRegistry local_registry = sim_registry;
  remote::OffloadContext context;
  context.transport_for = [transport](const std::string&) { return transport; };
  context.metrics = &metrics;
  context.local_runner_for = [local_runner](const std::string&) { return local_runner; };
  remote::install_offload_link(local_registry, std::move(context));

  const bool closed = workload.mode == WorkloadMode::ClosedLoop;
  int finished = 0;
  int resubmit = closed ? std::min(*workload.parallelism, workload.total_jobs) : 0;
  Engine engine(rewrite.local_flow, local_registry, EngineOptions{&clock, nullptr, [&](const JobRecord&) {
                                                                     ++finished;
                                                                     if (closed) ++resubmit;
                                                                   }});

  SimResult result;
  const double dt = options.dt_s;
  int injected = 0;
  for (std::int64_t n = 0;; ++n) {
    const double t = static_cast<double>(n) * dt;
    clock.set(t);
    if (finished == workload.total_jobs) {
      result.end_time_s = t;
      break;
    }
    if (t > options.max_time_s) {
      result.end_time_s = t;
      result.truncated = true;
      break;
    }

    if (closed) {
      for (; resubmit > 0 && injected < workload.total_jobs; --resubmit, ++injected) engine.inject({});
    } else {
      while (injected < workload.total_jobs && injected * *workload.inter_arrival_s <= t + 1e-9) {
        ++injected;
        engine.inject({});
      }
    }

    result.series.push_back({t, gateway.state().temp_c, gateway.freq_mhz(), gateway.cpu_util(),
                             static_cast<std::int64_t>(gateway.running())});

    std::vector<Event> due;
    for (const Completion& c : gateway.advance(dt)) {
      due.push_back({c.at_s, 0, [&waiting, id = c.id] {
                       auto node = waiting.extract(id);
                       node.mapped().emit(NodeResult::ok(std::move(node.mapped().message)));
                     }});
    }
    for (Event& e : events.pop_until(t + dt + 1e-9)) due.push_back(std::move(e));
    std::stable_sort(due.begin(), due.end(), [](const Event& a, const Event& b) { return a.at < b.at; });
    for (Event& e : due) {
      clock.set(e.at);
      e.fire();
    }
  }

  result.records = engine.drain(std::chrono::milliseconds(0));
  result.throttle_onset_s = gateway.throttle_onset_s();
  result.max_temp_c = gateway.max_temp_c();
  result.peak_local_jobs = metrics.gauge().peak();
  return result;
}

std::string series_to_csv(const std::vector<SeriesRow>& series) {
  std::string out = "t_s,temp_c,freq_mhz,cpu_util,jobs_in_flight\n";
  char line[128];
  for (const auto& r : series) {
    std::snprintf(line, sizeof line, "%.1f,%.3f,%.0f,%.3f,%lld\n", r.t_s, r.temp_c, r.freq_mhz, r.cpu_util,
                  static_cast<long long>(r.jobs_in_flight));
    out += line;
  }
  return out;
}

}  // namespace edgeflow::sim
