#include <cmath>
#include <cstdio>

#include "edgeflow/engine.hpp"
#include "edgeflow/work.hpp"

namespace edgeflow {

namespace {

inline std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t absorb(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
  return mix(h ^ bytes.size());
}

class PassThrough final : public NodeHandler {
 public:
  void on_message(Message message, Emit emit) override { emit(NodeResult::ok(std::move(message))); }
};

class WorkHandler final : public NodeHandler {
 public:
  WorkHandler(const FlowNode& node, std::uint64_t rounds_per_unit) : node_(node), rounds_per_unit_(rounds_per_unit) {}

  void on_message(Message message, Emit emit) override {
    message.payload = apply_work(std::move(message.payload), node_, rounds_per_unit_);
    emit(NodeResult::ok(std::move(message)));
  }

 private:
  const FlowNode& node_;
  std::uint64_t rounds_per_unit_;
};

}  // namespace

std::string work_digest(const Payload& payload, std::string_view node_id, std::uint64_t rounds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = absorb(h, node_id);
  for (const auto& [k, v] : payload) {
    h = absorb(h, k);
    h = absorb(h, v);
  }
  for (std::uint64_t i = 0; i < rounds; ++i) h = mix(h + i);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::uint64_t work_rounds(double units, std::uint64_t rounds_per_unit) {
  if (!(units > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::llround(units * static_cast<double>(rounds_per_unit)));
}

Payload apply_work(Payload payload, const FlowNode& node, std::uint64_t rounds_per_unit) {
  const double units = std::stod(node.get(config_keys::work_units).value_or("0"));
  payload[std::string(kResultKey)] = work_digest(payload, node.id, work_rounds(units, rounds_per_unit));
  return payload;
}

void NodeRegistry::add(std::string kind, HandlerFactory factory) { factories_[std::move(kind)] = std::move(factory); }

const HandlerFactory* NodeRegistry::find(std::string_view kind) const {
  auto it = factories_.find(kind);
  return it == factories_.end() ? nullptr : &it->second;
}

NodeRegistry NodeRegistry::standard(std::uint64_t rounds_per_unit) {
  NodeRegistry r;
  auto pass = [](const HandlerContext&) -> std::unique_ptr<NodeHandler> { return std::make_unique<PassThrough>(); };
  r.add(std::string(kinds::inject), pass);
  r.add(std::string(kinds::link_in), pass);
  r.add(std::string(kinds::link_out), pass);
  r.add(std::string(kinds::sink), pass);
  r.add(std::string(kinds::work), [rounds_per_unit](const HandlerContext& ctx) -> std::unique_ptr<NodeHandler> {
    return std::make_unique<WorkHandler>(ctx.node, rounds_per_unit);
  });
  return r;
}

}  // namespace edgeflow
