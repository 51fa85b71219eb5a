/**
 * @file remote.hpp
 * @brief Remote execution of extracted sub-flows and the offload-link node.
 *
 * `RemoteExecutor` hosts deployed sub-flows and runs jobs against them; it
 * is what `edgeflow serve` exposes over HTTP. A `Transport` carries the
 * protocol from the gateway side: `HttpTransport` talks to a server,
 * `InProcessTransport` calls an executor directly.
 *
 * The offload-link handler ties everything together: at admission it samples
 * the metrics source, asks the policy, and either runs the sub-flow in
 * process (counting it in the jobs gauge) or ships the payload through the
 * transport.
 */
#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "edgeflow/engine.hpp"
#include "edgeflow/metrics.hpp"
#include "edgeflow/policy.hpp"
#include "edgeflow/protocol.hpp"

namespace httplib {
class Server;
}

namespace edgeflow::remote {

enum class Fallback { Local, Fail };

struct RemoteEndpoint {
  std::string base_url;
  int connect_timeout_ms = 2000;
  int request_timeout_ms = 120000;
  Fallback fallback = Fallback::Local;

  void validate() const;
};

enum class FailureKind {
  ConnectionFailed,  ///< refused or unreachable
  Timeout,
  RemoteStatus,      ///< the remote answered with status "error"
  NotFound,          ///< unknown flow id
  Rejected,          ///< deployment failed validation
  Protocol,          ///< malformed exchange
};

std::string_view to_string(FailureKind kind);

struct TransportFailure {
  FailureKind kind;
  std::string detail;
  std::vector<Violation> violations;
};

class RemoteError : public std::runtime_error {
 public:
  explicit RemoteError(TransportFailure failure)
      : std::runtime_error(std::string(to_string(failure.kind)) + ": " + failure.detail),
        failure_(std::move(failure)) {}
  FailureKind kind() const noexcept { return failure_.kind; }
  const TransportFailure& failure() const noexcept { return failure_; }

 private:
  TransportFailure failure_;
};

using ExecuteResult = std::variant<OffloadResponse, TransportFailure>;

class Transport {
 public:
  virtual ~Transport() = default;
  /// Deploys `flow` remotely and returns its flow id. Throws RemoteError.
  virtual std::string deploy(const FlowGraph& flow) = 0;
  /// Executes one job; `done` is called exactly once, possibly later.
  virtual void execute(const OffloadRequest& request, std::function<void(ExecuteResult)> done) = 0;
};

/// Blocking call to `Transport::execute`. A response with status error is
/// returned as-is; transport problems throw RemoteError.
OffloadResponse execute_remote(Transport& transport, const OffloadRequest& request);

/// Checks that a flow can be served remotely: valid, exactly one tab, one
/// link-in entry and one link-out exit without target.
std::vector<Violation> remote_violations(const FlowGraph& flow);

/// Id a remote flow is deployed under (its single tab's id).
std::string remote_flow_id(const FlowGraph& flow);

/// Runs an extracted sub-flow from its link-in entry to its exit link-out.
class FlowRunner {
 public:
  struct Outcome {
    bool ok = false;
    Payload payload;
    std::string error;
  };
  using Done = std::function<void(Outcome)>;

  FlowRunner(FlowGraph flow, const NodeRegistry& registry, EngineOptions options = {});

  void run(JobId job, Payload payload, Done done);
  const FlowGraph& flow() const noexcept { return engine_->flow(); }

 private:
  std::unique_ptr<Engine> engine_;
  std::string entry_;
};

/// Hosts deployed sub-flows. Thread-safe.
class RemoteExecutor {
 public:
  explicit RemoteExecutor(NodeRegistry registry);
  ~RemoteExecutor();

  struct DeployOutcome {
    std::string flow_id;
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
  };

  /// Redeploying an identical flow keeps the running instance.
  DeployOutcome deploy(const FlowGraph& flow);
  std::optional<FlowGraph> find(const std::string& flow_id) const;
  bool has_flow(const std::string& flow_id) const;
  std::size_t deployed_count() const;

  /// Synchronous execution; unknown flow ids and handler failures come back
  /// as status-error responses.
  OffloadResponse execute(const OffloadRequest& request);

 private:
  NodeRegistry registry_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<FlowRunner>> flows_;
};

/// Calls a RemoteExecutor directly, optionally failing on purpose.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(RemoteExecutor& executor) : executor_(executor) {}

  std::string deploy(const FlowGraph& flow) override;
  void execute(const OffloadRequest& request, std::function<void(ExecuteResult)> done) override;

  /// While set, every execute fails with this failure.
  void inject_failure(std::optional<TransportFailure> failure);
  std::size_t execute_calls() const noexcept { return calls_.load(); }

 private:
  RemoteExecutor& executor_;
  std::mutex mutex_;
  std::optional<TransportFailure> failure_;
  std::atomic<std::size_t> calls_{0};
};

/// HTTP binding of the protocol.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(RemoteEndpoint endpoint);

  std::string deploy(const FlowGraph& flow) override;
  void execute(const OffloadRequest& request, std::function<void(ExecuteResult)> done) override;
  /// GET /flows/{id}; nullopt on 404.
  std::optional<FlowGraph> fetch(const std::string& flow_id);

  const RemoteEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  RemoteEndpoint endpoint_;
};

/// Serves a RemoteExecutor over HTTP.
class RemoteServer {
 public:
  explicit RemoteServer(RemoteExecutor& executor);
  ~RemoteServer();

  RemoteServer(const RemoteServer&) = delete;
  RemoteServer& operator=(const RemoteServer&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  /// Throws std::runtime_error on bind failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void listen();
  /// bind + listen on a background thread.
  int start(const std::string& host, int port);
  void stop();

  std::size_t requests_served() const noexcept { return served_.load(); }
  void set_logger(std::function<void(const std::string&)> log) { log_ = std::move(log); }

 private:
  void install_routes();

  RemoteExecutor& executor_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  bool bound_ = false;
  std::atomic<std::size_t> served_{0};
  std::function<void(const std::string&)> log_;
};

/// Dependencies shared by every offload-link node of a deployment.
struct OffloadContext {
  /// Transport for a node's `remote_url`.
  std::function<std::shared_ptr<Transport>(const std::string& url)> transport_for;
  MetricsSource* metrics = nullptr;
  /// In-process runner for a flow id, used when the decision is Local or as
  /// fallback.
  std::function<std::shared_ptr<FlowRunner>(const std::string& flow_id)> local_runner_for;
  Fallback fallback = Fallback::Local;
  /// Observes every admission decision (optional).
  std::function<void(JobId, const MetricsSnapshot&, const OffloadDecision&)> on_decision;
};

/// Registers the offload-link handler in `registry`.
void install_offload_link(NodeRegistry& registry, OffloadContext context);

}  // namespace edgeflow::remote
