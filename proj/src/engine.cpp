#include "edgeflow/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace edgeflow {

std::string_view to_string(Location location) { return location == Location::Local ? "local" : "remote"; }

struct Engine::Job {
  JobRecord record;
  std::size_t active = 0;
  bool recorded = false;
  bool failed = false;
  Done done;
};

Engine::Engine(FlowGraph flow, const NodeRegistry& registry, EngineOptions options)
    : flow_(std::move(flow)), on_job_done_(std::move(options.on_job_done)) {
  if (options.clock) {
    clock_ = options.clock;
  } else {
    owned_clock_ = std::make_unique<SteadyClock>();
    clock_ = owned_clock_.get();
  }
  if (options.scheduler) {
    scheduler_ = options.scheduler;
  } else {
    owned_scheduler_ = std::make_unique<InlineScheduler>();
    scheduler_ = owned_scheduler_.get();
  }

  if (auto violations = validate(flow_); !violations.empty()) {
    const auto& v = violations.front();
    throw EngineError(EngineError::Code::InvalidFlow, v.subject,
                      "cannot deploy invalid flow: " + std::string(to_string(v.code)) + " '" + v.subject + "'",
                      std::move(violations));
  }

  for (std::size_t i = 0; i < flow_.nodes.size(); ++i) index_.emplace(flow_.nodes[i].id, i);

  handlers_.reserve(flow_.nodes.size());
  for (const auto& node : flow_.nodes) {
    const HandlerFactory* factory = registry.find(node.kind);
    if (!factory)
      throw EngineError(EngineError::Code::UnresolvedKind, node.kind,
                        "no handler registered for node kind '" + node.kind + "'");
    handlers_.push_back((*factory)(HandlerContext{node, flow_, *clock_}));
    if (node.is(kinds::inject)) inject_nodes_.push_back(index_.at(node.id));
  }

  successors_.resize(flow_.nodes.size());
  for (const auto& wire : flow_.wires) successors_[index_.at(wire.from)].push_back(index_.at(wire.to));
  for (const auto& node : flow_.nodes) {
    if (!node.is(kinds::link_out)) continue;
    if (auto target = node.get(config_keys::target); target && !target->empty())
      successors_[index_.at(node.id)].push_back(index_.at(*target));
  }
}

Engine::~Engine() = default;

std::size_t Engine::index_of(std::string_view node_id) const {
  auto it = index_.find(std::string(node_id));
  if (it == index_.end())
    throw EngineError(EngineError::Code::UnknownNode, std::string(node_id),
                      "no node '" + std::string(node_id) + "' in deployed flow");
  return it->second;
}

JobId Engine::inject(Payload payload) {
  if (inject_nodes_.empty())
    throw EngineError(EngineError::Code::NoInjectNode, {}, "deployed flow has no inject node");
  Message m;
  m.payload = std::move(payload);
  return start(inject_nodes_.front(), std::move(m), nullptr, true);
}

JobId Engine::inject_at(std::string_view node_id, Payload payload) {
  Message m;
  m.payload = std::move(payload);
  return start(index_of(node_id), std::move(m), nullptr, true);
}

void Engine::submit(std::string_view node_id, Message message, Done done) {
  start(index_of(node_id), std::move(message), std::move(done), false);
}

JobId Engine::start(std::size_t node, Message message, Done done, bool recorded) {
  auto job = std::make_shared<Job>();
  {
    std::lock_guard lock(mutex_);
    if (shut_down_) throw EngineError(EngineError::Code::ShutDown, {}, "engine is shut down");
    if (recorded) message.job_id = next_id_++;
    message.injected_at = clock_->now();
    message.hops.clear();
    job->recorded = recorded;
    job->done = std::move(done);
    job->active = 1;
    job->record.job_id = message.job_id;
    job->record.started_at = message.injected_at;
    job->record.complete = false;
    if (recorded) {
      ++in_flight_;
      running_.emplace(message.job_id, job);
    }
  }
  const JobId id = message.job_id;
  deliver(job, node, std::move(message));
  return id;
}

void Engine::deliver(const std::shared_ptr<Job>& job, std::size_t node, Message message) {
  const std::string& id = flow_.nodes[node].id;
  if (std::find(message.hops.begin(), message.hops.end(), id) != message.hops.end()) {
    on_emit(job, node, NodeResult::fail("cycle: node '" + id + "' visited twice"));
    return;
  }
  message.hops.push_back(id);
  scheduler_->post([this, job, node, msg = std::move(message)]() mutable {
    try {
      handlers_[node]->on_message(std::move(msg), [this, job, node](NodeResult result) {
        on_emit(job, node, std::move(result));
      });
    } catch (const std::exception& e) {
      on_emit(job, node, NodeResult::fail(flow_.nodes[node].id + ": " + e.what()));
    }
  });
}

void Engine::on_emit(const std::shared_ptr<Job>& job, std::size_t node, NodeResult result) {
  if (!result.message) {
    {
      std::lock_guard lock(mutex_);
      job->failed = true;
      if (!job->record.error.empty()) job->record.error += "; ";
      job->record.error += result.error.empty() ? "node '" + flow_.nodes[node].id + "' failed" : result.error;
    }
    branch_finished(job);
    return;
  }

  Message& msg = *result.message;
  const auto& next = successors_[node];
  if (next.empty()) {
    {
      std::lock_guard lock(mutex_);
      job->record.outputs.push_back(msg.payload);
      if (msg.location == Location::Remote) job->record.location = Location::Remote;
    }
    branch_finished(job);
    return;
  }

  {
    std::lock_guard lock(mutex_);
    job->active += next.size() - 1;
  }
  for (std::size_t i = 0; i + 1 < next.size(); ++i) deliver(job, next[i], msg);
  deliver(job, next.back(), std::move(msg));
}

void Engine::branch_finished(const std::shared_ptr<Job>& job) {
  JobRecord done;
  {
    std::lock_guard lock(mutex_);
    if (--job->active > 0) return;
    JobRecord& r = job->record;
    r.finished_at = std::max(clock_->now(), r.started_at);
    r.duration_s = r.finished_at - r.started_at;
    r.success = !job->failed;
    r.complete = true;
    if (job->recorded) {
      records_[r.job_id] = r;
      running_.erase(r.job_id);
    }
    done = r;
  }
  if (!job->recorded) {
    if (job->done) job->done(done);
    return;
  }
  if (on_job_done_) on_job_done_(done);
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  idle_.notify_all();
}

std::vector<JobRecord> Engine::drain(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  idle_.wait_for(lock, timeout, [this] { return in_flight_ == 0; });
  std::vector<JobRecord> out;
  out.reserve(records_.size() + running_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  for (const auto& [id, job] : running_) {
    JobRecord partial = job->record;
    partial.complete = false;
    partial.success = false;
    partial.finished_at = clock_->now();
    partial.duration_s = partial.finished_at - partial.started_at;
    out.push_back(std::move(partial));
  }
  std::sort(out.begin(), out.end(), [](const JobRecord& a, const JobRecord& b) { return a.job_id < b.job_id; });
  return out;
}

void Engine::shutdown() {
  std::lock_guard lock(mutex_);
  shut_down_ = true;
}

std::size_t Engine::in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

std::unique_ptr<Engine> deploy(FlowGraph flow, const NodeRegistry& registry, EngineOptions options) {
  return std::make_unique<Engine>(std::move(flow), registry, std::move(options));
}

// --- statistics ---------------------------------------------------------------

EngineStats stats(std::span<const JobRecord> records) {
  EngineStats s;
  s.jobs_total = records.size();
  if (records.empty()) return s;

  // Sum in job-id order so the result does not depend on record order.
  std::vector<const JobRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const JobRecord* a, const JobRecord* b) { return a->job_id < b->job_id; });

  std::size_t ok = 0;
  double sum = 0.0;
  for (const JobRecord* r : sorted) {
    if (r->success) ++ok;
    if (r->location != Location::Local) continue;
    ++s.local_count;
    sum += r->duration_s;
    s.max_local_duration_s = std::max(s.max_local_duration_s, r->duration_s);
  }
  s.local_fraction = static_cast<double>(s.local_count) / static_cast<double>(s.jobs_total);
  s.success_ratio = static_cast<double>(ok) / static_cast<double>(s.jobs_total);
  if (s.local_count > 0) s.avg_local_duration_s = sum / static_cast<double>(s.local_count);
  return s;
}

std::string records_to_csv(std::span<const JobRecord> records, double run_start) {
  std::string out = "job_id,location,duration_s,success,started_at,finished_at\n";
  char line[160];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%lld,%s,%.3f,%s,%.3f,%.3f\n", static_cast<long long>(r.job_id),
                  r.location == Location::Local ? "local" : "remote", r.duration_s, r.success ? "true" : "false",
                  r.started_at - run_start, r.finished_at - run_start);
    out += line;
  }
  return out;
}

}  // namespace edgeflow
