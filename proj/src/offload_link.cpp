#include "edgeflow/remote.hpp"

namespace edgeflow::remote {

namespace {

struct Shared {
  OffloadContext context;
  JobsGauge fallback_gauge;

  JobsGauge& gauge() { return context.metrics ? context.metrics->gauge() : fallback_gauge; }
};

class OffloadLinkHandler final : public NodeHandler {
 public:
  OffloadLinkHandler(const HandlerContext& ctx, std::shared_ptr<Shared> shared)
      : shared_(std::move(shared)), clock_(ctx.clock), node_id_(ctx.node.id) {
    policy_ = parse_policy(ctx.node.get(config_keys::policy).value_or(""));
    url_ = ctx.node.get(config_keys::remote_url).value_or("");
    flow_id_ = ctx.node.get(config_keys::flow_id).value_or("");
    if (flow_id_.empty()) throw std::invalid_argument("offload-link '" + node_id_ + "' has no flow_id");
  }

  void on_message(Message message, Emit emit) override {
    const MetricsSnapshot snapshot = shared_->context.metrics ? shared_->context.metrics->sample() : MetricsSnapshot{};
    const OffloadDecision decision = decide(policy_, snapshot);
    if (shared_->context.on_decision) shared_->context.on_decision(message.job_id, snapshot, decision);
    if (decision.target == Target::Local)
      run_local(std::move(message), std::move(emit));
    else
      run_remote(std::move(message), std::move(emit));
  }

 private:
  void run_local(Message message, Emit emit) {
    std::shared_ptr<FlowRunner> runner =
        shared_->context.local_runner_for ? shared_->context.local_runner_for(flow_id_) : nullptr;
    if (!runner) {
      emit(NodeResult::fail(node_id_ + ": no local runner for flow '" + flow_id_ + "'"));
      return;
    }
    auto shared = shared_;
    shared->gauge().increment();
    const JobId job = message.job_id;
    Payload payload = message.payload;
    auto finish = [shared, message = std::move(message), emit](FlowRunner::Outcome outcome) mutable {
      shared->gauge().decrement();
      if (!outcome.ok) {
        emit(NodeResult::fail(outcome.error));
        return;
      }
      message.payload = std::move(outcome.payload);
      message.location = Location::Local;
      emit(NodeResult::ok(std::move(message)));
    };
    try {
      runner->run(job, std::move(payload), std::move(finish));
    } catch (const std::exception& e) {
      shared->gauge().decrement();
      emit(NodeResult::fail(node_id_ + ": " + e.what()));
    }
  }

  void run_remote(Message message, Emit emit) {
    std::shared_ptr<Transport> transport =
        shared_->context.transport_for ? shared_->context.transport_for(url_) : nullptr;
    if (!transport) {
      on_remote_failure(std::move(message), std::move(emit), "no transport for '" + url_ + "'");
      return;
    }
    OffloadRequest request{message.job_id, flow_id_, message.payload, clock_.now()};
    transport->execute(request, [this, message = std::move(message), emit](ExecuteResult result) mutable {
      if (auto* response = std::get_if<OffloadResponse>(&result); response && response->status == ResponseStatus::Ok) {
        message.payload = std::move(response->payload);
        message.location = Location::Remote;
        emit(NodeResult::ok(std::move(message)));
        return;
      }
      std::string detail = std::holds_alternative<TransportFailure>(result)
                               ? std::string(to_string(std::get<TransportFailure>(result).kind)) + ": " +
                                     std::get<TransportFailure>(result).detail
                               : "remote error: " + std::get<OffloadResponse>(result).error_detail;
      on_remote_failure(std::move(message), std::move(emit), std::move(detail));
    });
  }

  void on_remote_failure(Message message, Emit emit, std::string detail) {
    if (shared_->context.fallback == Fallback::Local) {
      run_local(std::move(message), std::move(emit));
      return;
    }
    emit(NodeResult::fail(node_id_ + ": " + detail));
  }

  std::shared_ptr<Shared> shared_;
  const Clock& clock_;
  std::string node_id_;
  PolicySpec policy_;
  std::string url_;
  std::string flow_id_;
};

}  // namespace

void install_offload_link(NodeRegistry& registry, OffloadContext context) {
  auto shared = std::make_shared<Shared>();
  shared->context = std::move(context);
  registry.add(std::string(kinds::offload_link), [shared](const HandlerContext& ctx) -> std::unique_ptr<NodeHandler> {
    return std::make_unique<OffloadLinkHandler>(ctx, shared);
  });
}

}  // namespace edgeflow::remote
