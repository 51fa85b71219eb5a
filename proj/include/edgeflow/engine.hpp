/**
 * @file engine.hpp
 * @brief Message-driven execution of flow graphs.
 *
 * The engine resolves a handler for every node at deploy time, then moves
 * messages along wires (and link-out targets) one node at a time. Handlers
 * complete asynchronously through an `Emit` callback, so a node may hand a
 * message to a thread, a remote call or a simulated CPU and resume later.
 *
 * A job ends when every branch of its traversal has reached a node without
 * successors (a sink or an exit link-out) or failed.
 */
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edgeflow/clock.hpp"
#include "edgeflow/flow.hpp"

namespace edgeflow {

using JobId = std::int64_t;

enum class Location { Local, Remote };

std::string_view to_string(Location location);

struct Message {
  JobId job_id = 0;
  Payload payload;
  double injected_at = 0.0;
  std::vector<std::string> hops;
  /// Where the heavy part of the job ran; set by the offload-link node.
  Location location = Location::Local;
};

struct JobRecord {
  JobId job_id = 0;
  Location location = Location::Local;
  double duration_s = 0.0;
  bool success = false;
  double started_at = 0.0;
  double finished_at = 0.0;
  /// False for jobs still in flight when a drain timed out.
  bool complete = true;
  std::string error;
  /// Payloads that reached terminal nodes, in arrival order.
  std::vector<Payload> outputs;

  bool operator==(const JobRecord&) const = default;
};

/// Aggregates in the shape of the strategy comparison table. Duration
/// columns cover local jobs only; they are 0 when `local_count` is 0.
struct EngineStats {
  std::size_t jobs_total = 0;
  std::size_t local_count = 0;
  double local_fraction = 0.0;
  double avg_local_duration_s = 0.0;
  double max_local_duration_s = 0.0;
  double success_ratio = 0.0;

  bool operator==(const EngineStats&) const = default;
};

EngineStats stats(std::span<const JobRecord> records);

/// CSV with header `job_id,location,duration_s,success,started_at,finished_at`.
/// Timestamps are seconds since `run_start`, millisecond precision.
std::string records_to_csv(std::span<const JobRecord> records, double run_start = 0.0);

struct NodeResult {
  std::optional<Message> message;
  std::string error;

  static NodeResult ok(Message m) { return {std::move(m), {}}; }
  static NodeResult fail(std::string e) { return {std::nullopt, std::move(e)}; }
};

using Emit = std::function<void(NodeResult)>;

/// Behaviour of one deployed node. `emit` must be called exactly once,
/// from any thread, possibly after on_message returns.
class NodeHandler {
 public:
  virtual ~NodeHandler() = default;
  virtual void on_message(Message message, Emit emit) = 0;
};

struct HandlerContext {
  const FlowNode& node;
  const FlowGraph& flow;
  const Clock& clock;
};

using HandlerFactory = std::function<std::unique_ptr<NodeHandler>(const HandlerContext&)>;

/// Maps node kinds to handler factories.
class NodeRegistry {
 public:
  void add(std::string kind, HandlerFactory factory);
  const HandlerFactory* find(std::string_view kind) const;

  /// inject, link-in, link-out and sink pass messages through unchanged;
  /// work runs the synthetic CPU-bound job (see work.hpp).
  static NodeRegistry standard(std::uint64_t rounds_per_unit);

 private:
  std::map<std::string, HandlerFactory, std::less<>> factories_;
};

class EngineError : public std::runtime_error {
 public:
  enum class Code { InvalidFlow, UnresolvedKind, NoInjectNode, UnknownNode, ShutDown };

  EngineError(Code code, std::string subject, const std::string& what,
              std::vector<Violation> violations = {})
      : std::runtime_error(what),
        code_(code),
        subject_(std::move(subject)),
        violations_(std::move(violations)) {}

  Code code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  Code code_;
  std::string subject_;
  std::vector<Violation> violations_;
};

struct EngineOptions {
  /// Defaults to a SteadyClock owned by the engine.
  const Clock* clock = nullptr;
  /// Defaults to an InlineScheduler owned by the engine.
  Scheduler* scheduler = nullptr;
  /// Called once per finished injected job, after its record is stored.
  std::function<void(const JobRecord&)> on_job_done;
};

/// A deployed flow accepting injections. Safe for concurrent use.
class Engine {
 public:
  /// Validates `flow` and resolves a handler for every node.
  /// Throws EngineError(InvalidFlow) or EngineError(UnresolvedKind).
  Engine(FlowGraph flow, const NodeRegistry& registry, EngineOptions options = {});
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Starts a job at the first inject node and returns its id immediately.
  JobId inject(Payload payload);
  /// Starts a job at a specific node (an inject node or a link-in entry).
  JobId inject_at(std::string_view node_id, Payload payload);

  using Done = std::function<void(const JobRecord&)>;
  /// Runs a caller-identified traversal from `node_id` without recording it;
  /// `done` receives the finished record. Used to execute extracted sub-flows.
  void submit(std::string_view node_id, Message message, Done done);

  /// Waits for every injected job to finish and returns all records ordered
  /// by job id. On timeout, jobs still running are returned with
  /// `complete == false`.
  std::vector<JobRecord> drain(std::chrono::milliseconds timeout = std::chrono::hours(1));

  /// Rejects further injections; in-flight jobs still finish.
  void shutdown();

  std::size_t inject_points() const noexcept { return inject_nodes_.size(); }
  std::size_t in_flight() const;
  const FlowGraph& flow() const noexcept { return flow_; }
  const Clock& clock() const noexcept { return *clock_; }

 private:
  struct Job;

  std::size_t index_of(std::string_view node_id) const;
  JobId start(std::size_t node, Message message, Done done, bool recorded);
  void deliver(const std::shared_ptr<Job>& job, std::size_t node, Message message);
  void on_emit(const std::shared_ptr<Job>& job, std::size_t node, NodeResult result);
  void branch_finished(const std::shared_ptr<Job>& job);

  FlowGraph flow_;
  std::unique_ptr<Clock> owned_clock_;
  std::unique_ptr<Scheduler> owned_scheduler_;
  const Clock* clock_;
  Scheduler* scheduler_;
  std::function<void(const JobRecord&)> on_job_done_;

  std::vector<std::unique_ptr<NodeHandler>> handlers_;
  std::vector<std::vector<std::size_t>> successors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> inject_nodes_;

  mutable std::mutex mutex_;
  std::condition_variable idle_;
  bool shut_down_ = false;
  JobId next_id_ = 1;
  std::size_t in_flight_ = 0;
  std::map<JobId, JobRecord> records_;
  std::map<JobId, std::shared_ptr<Job>> running_;
};

/// Deploys `flow` into a new engine.
std::unique_ptr<Engine> deploy(FlowGraph flow, const NodeRegistry& registry,
                               EngineOptions options = {});

}  // namespace edgeflow
