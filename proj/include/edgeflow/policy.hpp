// Offload policies: threshold rules mapping a metrics snapshot to a
// Local/Remote decision, with all-of / any-of combinators.
//
// Grammar (whitespace around tokens is ignored):
//   spec     := metric | constant | combinator
//   metric   := ("jobs" | "cpu" | "mem" | "temp") ":" number
//   constant := "always-local" | "always-remote"
//   combinator := ("all-of" | "any-of") "(" spec ("," spec)* ")"
//
// A metric at or above its threshold selects Remote.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/metrics.hpp"

namespace edgeflow {

enum class PolicyKind { Jobs, Cpu, Mem, Temp, AllOf, AnyOf, AlwaysLocal, AlwaysRemote };

std::string_view to_string(PolicyKind kind);

struct PolicySpec {
  PolicyKind kind = PolicyKind::AlwaysLocal;
  /// jobs: count, cpu/mem: fraction, temp: degrees Celsius.
  double threshold = 0.0;
  std::vector<PolicySpec> children;

  bool operator==(const PolicySpec&) const = default;
};

enum class Target { Local, Remote };

std::string_view to_string(Target target);

struct OffloadDecision {
  Target target = Target::Local;
  std::string reason;
};

class PolicyError : public std::runtime_error {
 public:
  enum class Code { Grammar, OutOfRange };

  PolicyError(Code code, const std::string& what, std::size_t position)
      : std::runtime_error(what), code_(code), position_(position) {}

  Code code() const noexcept { return code_; }
  std::size_t position() const noexcept { return position_; }

 private:
  Code code_;
  std::size_t position_;
};

PolicySpec parse_policy(std::string_view spec);

/// Canonical text form; `parse_policy(to_string(p)) == p`.
std::string to_string(const PolicySpec& policy);

/// Throws PolicyError(OutOfRange) when a threshold is outside its unit's
/// range, or Grammar when a combinator has no children.
void check_policy(const PolicySpec& policy);

OffloadDecision decide(const PolicySpec& policy, const MetricsSnapshot& snapshot);

}  // namespace edgeflow
