#include "edgeflow/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "edgeflow/policy.hpp"

namespace edgeflow {

std::optional<std::string> FlowNode::get(std::string_view key) const {
  auto it = config.find(std::string(key));
  if (it == config.end()) return std::nullopt;
  return it->second;
}

const FlowNode* FlowGraph::find_node(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const Tab* FlowGraph::find_tab(std::string_view id) const {
  for (const auto& t : tabs)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const FlowNode*> FlowGraph::nodes_in_tab(std::string_view tab_id) const {
  std::vector<const FlowNode*> out;
  for (const auto& n : nodes)
    if (n.tab == tab_id) out.push_back(&n);
  return out;
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::DuplicateId: return "DuplicateId";
    case ViolationCode::DuplicateTabId: return "DuplicateTabId";
    case ViolationCode::UnknownTab: return "UnknownTab";
    case ViolationCode::DanglingWire: return "DanglingWire";
    case ViolationCode::SelfWire: return "SelfWire";
    case ViolationCode::DanglingLink: return "DanglingLink";
    case ViolationCode::MultipleOffloadableTabs: return "MultipleOffloadableTabs";
    case ViolationCode::MissingConfig: return "MissingConfig";
    case ViolationCode::InvalidConfig: return "InvalidConfig";
    case ViolationCode::MissingEntry: return "MissingEntry";
    case ViolationCode::MissingExit: return "MissingExit";
  }
  return "Unknown";
}

std::string_view to_string(FlowError::Code code) {
  using C = FlowError::Code;
  switch (code) {
    case C::Syntax: return "Syntax";
    case C::Schema: return "Schema";
    case C::Semantic: return "Semantic";
    case C::NoOffloadableTab: return "NoOffloadableTab";
    case C::MultipleOffloadableTabs: return "MultipleOffloadableTabs";
    case C::MissingEntry: return "MissingEntry";
    case C::MultipleEntries: return "MultipleEntries";
    case C::MissingExit: return "MissingExit";
    case C::MultipleExits: return "MultipleExits";
    case C::ExternalLink: return "ExternalLink";
    case C::IdCollision: return "IdCollision";
    case C::InvalidPolicy: return "InvalidPolicy";
  }
  return "Unknown";
}

namespace {

bool positive_number(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && std::isfinite(value) && value > 0.0;
}

void check_node_config(const FlowNode& node, std::vector<Violation>& out) {
  auto require = [&](std::string_view key) -> std::optional<std::string> {
    auto value = node.get(key);
    if (!value || value->empty()) {
      out.push_back({ViolationCode::MissingConfig, node.id,
                     "missing config key '" + std::string(key) + "'"});
      return std::nullopt;
    }
    return value;
  };

  if (node.is(kinds::work)) {
    if (auto units = require(config_keys::work_units); units && !positive_number(*units))
      out.push_back({ViolationCode::InvalidConfig, node.id,
                     "work_units must be a positive number, got '" + *units + "'"});
  } else if (node.is(kinds::offload_link)) {
    if (auto policy = require(config_keys::policy)) {
      try {
        parse_policy(*policy);
      } catch (const PolicyError& e) {
        out.push_back({ViolationCode::InvalidConfig, node.id, e.what()});
      }
    }
    require(config_keys::remote_url);
  }
}

}  // namespace

std::vector<Violation> validate(const FlowGraph& flow) {
  std::vector<Violation> out;

  std::unordered_set<std::string> tab_ids;
  std::size_t offloadable = 0;
  for (const auto& tab : flow.tabs) {
    if (!tab_ids.insert(tab.id).second)
      out.push_back({ViolationCode::DuplicateTabId, tab.id, "duplicate tab id"});
    if (tab.offloadable) ++offloadable;
  }
  if (offloadable > 1)
    out.push_back({ViolationCode::MultipleOffloadableTabs, {},
                   std::to_string(offloadable) + " tabs are marked offloadable"});

  std::unordered_map<std::string, const FlowNode*> by_id;
  for (const auto& node : flow.nodes) {
    if (!by_id.emplace(node.id, &node).second)
      out.push_back({ViolationCode::DuplicateId, node.id, "duplicate node id"});
    if (!tab_ids.contains(node.tab))
      out.push_back({ViolationCode::UnknownTab, node.id, "unknown tab '" + node.tab + "'"});
    check_node_config(node, out);
  }

  for (const auto& wire : flow.wires) {
    const std::string subject = wire.from + "->" + wire.to;
    if (wire.from == wire.to)
      out.push_back({ViolationCode::SelfWire, wire.from, "wire from a node to itself"});
    if (!by_id.contains(wire.from))
      out.push_back({ViolationCode::DanglingWire, wire.from, "wire " + subject + " starts at unknown node"});
    if (!by_id.contains(wire.to))
      out.push_back({ViolationCode::DanglingWire, wire.to, "wire " + subject + " ends at unknown node"});
  }

  for (const auto& node : flow.nodes) {
    if (!node.is(kinds::link_out)) continue;
    auto target = node.get(config_keys::target);
    if (!target || target->empty()) continue;  // exit point
    auto it = by_id.find(*target);
    if (it == by_id.end()) {
      out.push_back({ViolationCode::DanglingLink, node.id, "link target '" + *target + "' does not exist"});
    } else if (!it->second->is(kinds::link_in) && !it->second->is(kinds::offload_link)) {
      out.push_back({ViolationCode::DanglingLink, node.id,
                     "link target '" + *target + "' is a " + it->second->kind + " node"});
    }
  }
  return out;
}

std::string offload_link_id(std::string_view tab_id) { return std::string(tab_id) + "-olink"; }

RewriteResult extract_offloadable(const FlowGraph& flow, std::string_view remote_url,
                                  std::string_view policy_spec) {
  using C = FlowError::Code;

  std::vector<const Tab*> offloadable;
  for (const auto& tab : flow.tabs)
    if (tab.offloadable) offloadable.push_back(&tab);
  if (offloadable.empty()) throw FlowError(C::NoOffloadableTab, {}, "no tab is marked offloadable");
  if (offloadable.size() > 1)
    throw FlowError(C::MultipleOffloadableTabs, offloadable[1]->id, "more than one tab is marked offloadable");

  if (auto violations = validate(flow); !violations.empty())
    throw FlowError(C::Semantic, violations.front().subject,
                    "invalid flow: " + violations.front().detail);

  try {
    parse_policy(policy_spec);
  } catch (const PolicyError& e) {
    throw FlowError(C::InvalidPolicy, std::string(policy_spec), e.what());
  }

  const Tab& tab = *offloadable.front();
  std::vector<const FlowNode*> entries, exits;
  std::unordered_set<std::string> inside;
  for (const FlowNode* n : flow.nodes_in_tab(tab.id)) {
    inside.insert(n->id);
    if (n->is(kinds::link_in)) entries.push_back(n);
    if (n->is(kinds::link_out)) exits.push_back(n);
  }
  if (entries.empty()) throw FlowError(C::MissingEntry, tab.id, "offloadable tab has no link-in entry");
  if (entries.size() > 1) throw FlowError(C::MultipleEntries, entries[1]->id, "offloadable tab has more than one link-in entry");
  if (exits.empty()) throw FlowError(C::MissingExit, tab.id, "offloadable tab has no link-out exit");
  if (exits.size() > 1) throw FlowError(C::MultipleExits, exits[1]->id, "offloadable tab has more than one link-out exit");

  const FlowNode& entry = *entries.front();
  const FlowNode& exit = *exits.front();

  auto exit_target = exit.get(config_keys::target);
  if (!exit_target || exit_target->empty())
    throw FlowError(C::MissingExit, exit.id, "exit link-out does not lead back to the main flow");
  const FlowNode* resume = flow.find_node(*exit_target);
  if (inside.contains(*exit_target))
    throw FlowError(C::ExternalLink, exit.id, "exit link-out targets its own tab");
  const std::string main_tab = resume->tab;

  std::vector<const FlowNode*> feeders;
  for (const auto& node : flow.nodes) {
    if (inside.contains(node.id) || !node.is(kinds::link_out)) continue;
    if (node.get(config_keys::target) != entry.id) continue;
    if (node.tab != main_tab)
      throw FlowError(C::ExternalLink, node.id,
                      "link into the offloadable tab from third tab '" + node.tab + "'");
    feeders.push_back(&node);
  }
  if (feeders.empty()) throw FlowError(C::MissingEntry, entry.id, "no link-out feeds the offloadable tab");

  for (const auto& wire : flow.wires) {
    if (inside.contains(wire.from) != inside.contains(wire.to))
      throw FlowError(C::ExternalLink, wire.from + "->" + wire.to, "wire crosses the offloadable tab boundary");
  }

  const std::string olink = offload_link_id(tab.id);
  if (flow.find_node(olink)) throw FlowError(C::IdCollision, olink, "node id '" + olink + "' already exists");

  RewriteResult result;
  result.offload_node_id = olink;
  result.flow_id = tab.id;

  FlowGraph& local = result.local_flow;
  FlowGraph& remote = result.remote_flow;
  for (const auto& t : flow.tabs) (t.id == tab.id ? remote : local).tabs.push_back(t);

  for (const auto& node : flow.nodes) {
    if (inside.contains(node.id)) {
      FlowNode copy = node;
      if (copy.id == exit.id) copy.config.erase(std::string(config_keys::target));
      remote.nodes.push_back(std::move(copy));
    } else {
      FlowNode copy = node;
      if (copy.is(kinds::link_out) && copy.get(config_keys::target) == entry.id)
        copy.config[std::string(config_keys::target)] = olink;
      local.nodes.push_back(std::move(copy));
    }
  }
  local.nodes.push_back(FlowNode{olink,
                                 main_tab,
                                 std::string(kinds::offload_link),
                                 {{std::string(config_keys::policy), std::string(policy_spec)},
                                  {std::string(config_keys::remote_url), std::string(remote_url)},
                                  {std::string(config_keys::flow_id), tab.id}}});

  for (const auto& wire : flow.wires) (inside.contains(wire.from) ? remote : local).wires.push_back(wire);
  local.wires.push_back(Wire{olink, resume->id});

  return result;
}

}  // namespace edgeflow
