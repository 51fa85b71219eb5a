/**
 * @file flow.hpp
 * @brief Flow graphs: tabs, nodes and wires describing an event-driven
 *        program, plus the tab-offloading rewrite.
 *
 * A flow is split into tabs. Messages move along wires inside a tab and
 * jump between tabs through link nodes: a `link-out` node names its
 * destination in the `target` config key. A `link-out` without a target is
 * an exit point; the message leaving it is the output of the traversal.
 *
 * At most one tab may be marked offloadable. `extract_offloadable` cuts that
 * tab out into its own flow and replaces it in the local flow with a single
 * `offload-link` node that decides per message where the tab runs.
 */
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgeflow {

using Config = std::map<std::string, std::string>;
using Payload = std::map<std::string, std::string>;

namespace kinds {
inline constexpr std::string_view inject = "inject";
inline constexpr std::string_view work = "work";
inline constexpr std::string_view link_in = "link-in";
inline constexpr std::string_view link_out = "link-out";
inline constexpr std::string_view offload_link = "offload-link";
inline constexpr std::string_view sink = "sink";
}  // namespace kinds

namespace config_keys {
inline constexpr std::string_view work_units = "work_units";
inline constexpr std::string_view target = "target";
inline constexpr std::string_view policy = "policy";
inline constexpr std::string_view remote_url = "remote_url";
inline constexpr std::string_view flow_id = "flow_id";
}  // namespace config_keys

struct Tab {
  std::string id;
  std::string name;
  bool offloadable = false;

  bool operator==(const Tab&) const = default;
};

struct FlowNode {
  std::string id;
  std::string tab;
  /// One of `kinds::*` for nodes the runtime knows; any other string is kept
  /// verbatim and rejected later by the engine if no handler resolves it.
  std::string kind;
  Config config;

  std::optional<std::string> get(std::string_view key) const;
  bool is(std::string_view k) const { return kind == k; }

  bool operator==(const FlowNode&) const = default;
};

struct Wire {
  std::string from;
  std::string to;

  bool operator==(const Wire&) const = default;
};

/// Immutable-by-convention value describing a deployable program.
struct FlowGraph {
  std::vector<Tab> tabs;
  std::vector<FlowNode> nodes;
  std::vector<Wire> wires;

  const FlowNode* find_node(std::string_view id) const;
  const Tab* find_tab(std::string_view id) const;
  std::vector<const FlowNode*> nodes_in_tab(std::string_view tab_id) const;

  bool operator==(const FlowGraph&) const = default;
};

enum class ViolationCode {
  DuplicateId,
  DuplicateTabId,
  UnknownTab,
  DanglingWire,
  SelfWire,
  DanglingLink,
  MultipleOffloadableTabs,
  MissingConfig,
  InvalidConfig,
  MissingEntry,
  MissingExit,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  /// Node, tab or wire ("from->to") the violation is about; empty for
  /// graph-wide violations.
  std::string subject;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Returns every broken invariant of `flow`; empty iff the graph is valid.
std::vector<Violation> validate(const FlowGraph& flow);

class FlowError : public std::runtime_error {
 public:
  enum class Code {
    Syntax,
    Schema,
    Semantic,
    NoOffloadableTab,
    MultipleOffloadableTabs,
    MissingEntry,
    MultipleEntries,
    MissingExit,
    MultipleExits,
    ExternalLink,
    IdCollision,
    InvalidPolicy,
  };

  FlowError(Code code, std::string subject, const std::string& what,
            std::size_t position = 0)
      : std::runtime_error(what),
        code_(code),
        subject_(std::move(subject)),
        position_(position) {}

  Code code() const noexcept { return code_; }
  /// The offending id (node, tab, wire endpoint or field name).
  const std::string& subject() const noexcept { return subject_; }
  /// Byte offset of a syntax error; 0 otherwise.
  std::size_t position() const noexcept { return position_; }

 private:
  Code code_;
  std::string subject_;
  std::size_t position_;
};

std::string_view to_string(FlowError::Code code);

/// Parses a flow document. Throws FlowError (Syntax, Schema or Semantic).
FlowGraph parse_flow(std::string_view text);

/// Like parse_flow but skips semantic validation (Syntax or Schema only).
FlowGraph parse_flow_structure(std::string_view text);

/// Canonical document for `flow`; `parse_flow(serialize_flow(g)) == g`.
std::string serialize_flow(const FlowGraph& flow, int indent = 2);

struct RewriteResult {
  FlowGraph local_flow;
  FlowGraph remote_flow;
  /// Id of the offload-link node spliced into `local_flow`.
  std::string offload_node_id;
  /// Id the remote flow deploys under (the extracted tab id).
  std::string flow_id;
};

/// Id given to the offload-link node that replaces tab `tab_id`.
std::string offload_link_id(std::string_view tab_id);

/// Extracts the offloadable tab of `flow` into a standalone remote flow and
/// rewrites the local flow to reach it through one offload-link node.
///
/// The offloadable tab must have exactly one `link-in` entry and one
/// `link-out` exit, and may only be linked to a single other tab. Throws
/// FlowError on any violated precondition.
RewriteResult extract_offloadable(const FlowGraph& flow,
                                  std::string_view remote_url,
                                  std::string_view policy_spec);

}  // namespace edgeflow
