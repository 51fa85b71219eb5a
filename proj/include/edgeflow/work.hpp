// Synthetic CPU-bound job standing in for a real workload node.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "edgeflow/flow.hpp"

namespace edgeflow {

/// Key under which work nodes store their digest.
inline constexpr std::string_view kResultKey = "result";

/// Mixes `payload` and `node_id` through `rounds` iterations of a 64-bit
/// hash and returns the state as 16 hex digits. Pure and deterministic.
std::string work_digest(const Payload& payload, std::string_view node_id, std::uint64_t rounds);

/// Rounds a work node performs for `units` work units.
std::uint64_t work_rounds(double units, std::uint64_t rounds_per_unit);

/// Applies a work node to `payload`: stores the digest under kResultKey.
Payload apply_work(Payload payload, const FlowNode& node, std::uint64_t rounds_per_unit);

}  // namespace edgeflow
