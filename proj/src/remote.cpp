#include "edgeflow/remote.hpp"

#include <chrono>
#include <future>

namespace edgeflow::remote {

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::ConnectionFailed: return "connection failed";
    case FailureKind::Timeout: return "timeout";
    case FailureKind::RemoteStatus: return "remote error";
    case FailureKind::NotFound: return "not found";
    case FailureKind::Rejected: return "rejected";
    case FailureKind::Protocol: return "protocol error";
  }
  return "unknown";
}

void RemoteEndpoint::validate() const {
  if (base_url.empty()) throw std::invalid_argument("remote endpoint: base_url is empty");
  if (connect_timeout_ms <= 0) throw std::invalid_argument("remote endpoint: connect_timeout_ms must be > 0");
  if (request_timeout_ms <= 0) throw std::invalid_argument("remote endpoint: request_timeout_ms must be > 0");
}

OffloadResponse execute_remote(Transport& transport, const OffloadRequest& request) {
  std::promise<ExecuteResult> promise;
  auto future = promise.get_future();
  transport.execute(request, [&promise](ExecuteResult result) { promise.set_value(std::move(result)); });
  ExecuteResult result = future.get();
  if (auto* failure = std::get_if<TransportFailure>(&result)) throw RemoteError(std::move(*failure));
  return std::get<OffloadResponse>(std::move(result));
}

std::vector<Violation> remote_violations(const FlowGraph& flow) {
  std::vector<Violation> out = validate(flow);
  if (flow.tabs.size() != 1) {
    out.push_back({ViolationCode::InvalidConfig, {},
                   "remote flow must have exactly one tab, found " + std::to_string(flow.tabs.size())});
    return out;
  }
  std::size_t entries = 0, exits = 0;
  for (const auto& node : flow.nodes) {
    if (node.is(kinds::link_in)) ++entries;
    if (node.is(kinds::link_out) && node.get(config_keys::target).value_or("").empty()) ++exits;
  }
  const std::string& tab = flow.tabs.front().id;
  if (entries != 1)
    out.push_back({ViolationCode::MissingEntry, tab,
                   "expected exactly one link-in entry, found " + std::to_string(entries)});
  if (exits != 1)
    out.push_back({ViolationCode::MissingExit, tab,
                   "expected exactly one link-out exit, found " + std::to_string(exits)});
  return out;
}

std::string remote_flow_id(const FlowGraph& flow) { return flow.tabs.empty() ? std::string{} : flow.tabs.front().id; }

// --- FlowRunner ---------------------------------------------------------------

FlowRunner::FlowRunner(FlowGraph flow, const NodeRegistry& registry, EngineOptions options) {
  for (const auto& node : flow.nodes)
    if (node.is(kinds::link_in)) {
      entry_ = node.id;
      break;
    }
  if (entry_.empty()) throw EngineError(EngineError::Code::UnknownNode, {}, "sub-flow has no link-in entry");
  engine_ = std::make_unique<Engine>(std::move(flow), registry, std::move(options));
}

void FlowRunner::run(JobId job, Payload payload, Done done) {
  Message message;
  message.job_id = job;
  message.payload = std::move(payload);
  engine_->submit(entry_, std::move(message), [done = std::move(done)](const JobRecord& record) {
    Outcome outcome;
    if (!record.success) {
      outcome.error = record.error.empty() ? "sub-flow failed" : record.error;
    } else if (record.outputs.empty()) {
      outcome.error = "sub-flow produced no output";
    } else {
      outcome.ok = true;
      outcome.payload = record.outputs.front();
    }
    done(std::move(outcome));
  });
}

// --- RemoteExecutor -----------------------------------------------------------

RemoteExecutor::RemoteExecutor(NodeRegistry registry) : registry_(std::move(registry)) {}

RemoteExecutor::~RemoteExecutor() = default;

RemoteExecutor::DeployOutcome RemoteExecutor::deploy(const FlowGraph& flow) {
  DeployOutcome outcome;
  outcome.flow_id = remote_flow_id(flow);
  outcome.violations = remote_violations(flow);
  if (!outcome.ok()) return outcome;

  {
    std::shared_lock lock(mutex_);
    auto it = flows_.find(outcome.flow_id);
    if (it != flows_.end() && it->second->flow() == flow) return outcome;
  }
  std::shared_ptr<FlowRunner> runner;
  try {
    runner = std::make_shared<FlowRunner>(flow, registry_);
  } catch (const EngineError& e) {
    outcome.violations = e.violations();
    if (outcome.violations.empty()) outcome.violations.push_back({ViolationCode::InvalidConfig, e.subject(), e.what()});
    return outcome;
  }
  std::unique_lock lock(mutex_);
  flows_[outcome.flow_id] = std::move(runner);
  return outcome;
}

std::optional<FlowGraph> RemoteExecutor::find(const std::string& flow_id) const {
  std::shared_lock lock(mutex_);
  auto it = flows_.find(flow_id);
  if (it == flows_.end()) return std::nullopt;
  return it->second->flow();
}

bool RemoteExecutor::has_flow(const std::string& flow_id) const {
  std::shared_lock lock(mutex_);
  return flows_.contains(flow_id);
}

std::size_t RemoteExecutor::deployed_count() const {
  std::shared_lock lock(mutex_);
  return flows_.size();
}

OffloadResponse RemoteExecutor::execute(const OffloadRequest& request) {
  std::shared_ptr<FlowRunner> runner;
  {
    std::shared_lock lock(mutex_);
    auto it = flows_.find(request.flow_id);
    if (it != flows_.end()) runner = it->second;
  }
  if (!runner) return OffloadResponse::error(request.job_id, std::string(kUnknownFlow));

  const auto start = std::chrono::steady_clock::now();
  std::promise<FlowRunner::Outcome> promise;
  auto future = promise.get_future();
  try {
    runner->run(request.job_id, request.payload,
                [&promise](FlowRunner::Outcome outcome) { promise.set_value(std::move(outcome)); });
  } catch (const std::exception& e) {
    return OffloadResponse::error(request.job_id, e.what());
  }
  FlowRunner::Outcome outcome = future.get();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!outcome.ok) return OffloadResponse::error(request.job_id, outcome.error);
  return {request.job_id, std::move(outcome.payload), elapsed, ResponseStatus::Ok, {}};
}

// --- InProcessTransport -------------------------------------------------------

std::string InProcessTransport::deploy(const FlowGraph& flow) {
  auto outcome = executor_.deploy(flow);
  if (!outcome.ok())
    throw RemoteError({FailureKind::Rejected, "remote flow failed validation", std::move(outcome.violations)});
  return outcome.flow_id;
}

void InProcessTransport::execute(const OffloadRequest& request, std::function<void(ExecuteResult)> done) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    if (failure_) {
      TransportFailure failure = *failure_;
      done(std::move(failure));
      return;
    }
  }
  if (!executor_.has_flow(request.flow_id)) {
    done(TransportFailure{FailureKind::NotFound, std::string(kUnknownFlow), {}});
    return;
  }
  done(executor_.execute(request));
}

void InProcessTransport::inject_failure(std::optional<TransportFailure> failure) {
  std::lock_guard lock(mutex_);
  failure_ = std::move(failure);
}

}  // namespace edgeflow::remote
