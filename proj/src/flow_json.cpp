// Flow document (de)serialization.
//
// {"tabs":  [{"id": "...", "name": "...", "offloadable": false}, ...],
//  "nodes": [{"id": "...", "tab": "...", "kind": "...", "config": {...}}, ...],
//  "wires": [{"from": "...", "to": "..."}, ...]}
//
// Config values are strings; numbers and booleans are accepted and stored
// in their textual form. Unknown fields anywhere are rejected.
#include <initializer_list>
#include <nlohmann/json.hpp>

#include "edgeflow/flow.hpp"

namespace edgeflow {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& subject, const std::string& what) {
  throw FlowError(FlowError::Code::Schema, subject, what);
}

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : object.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) schema_error(key, "unknown field '" + key + "' in " + where);
  }
}

const json& member(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) schema_error(key, "missing field '" + std::string(key) + "' in " + where);
  return *it;
}

std::string string_member(const json& object, const char* key, const std::string& where) {
  const json& value = member(object, key, where);
  if (!value.is_string()) schema_error(key, "field '" + std::string(key) + "' in " + where + " must be a string");
  return value.get<std::string>();
}

const json& array_member(const json& doc, const char* key) {
  const json& value = member(doc, key, "flow document");
  if (!value.is_array()) schema_error(key, "field '" + std::string(key) + "' must be an array");
  return value;
}

std::string config_value(const json& value, const std::string& key, const std::string& node) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number() || value.is_boolean()) return value.dump();
  schema_error(key, "config value '" + key + "' of node '" + node + "' must be a primitive");
}

}  // namespace

FlowGraph parse_flow_structure(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Code::Syntax, {}, e.what(), e.byte);
  }
  if (!doc.is_object()) schema_error({}, "flow document must be an object");
  reject_unknown(doc, {"tabs", "nodes", "wires"}, "flow document");

  FlowGraph flow;
  for (const auto& t : array_member(doc, "tabs")) {
    if (!t.is_object()) schema_error("tabs", "tab entries must be objects");
    reject_unknown(t, {"id", "name", "offloadable"}, "tab");
    Tab tab;
    tab.id = string_member(t, "id", "tab");
    tab.name = t.contains("name") ? string_member(t, "name", "tab " + tab.id) : std::string{};
    if (auto it = t.find("offloadable"); it != t.end()) {
      if (!it->is_boolean()) schema_error(tab.id, "field 'offloadable' of tab '" + tab.id + "' must be a boolean");
      tab.offloadable = it->get<bool>();
    }
    flow.tabs.push_back(std::move(tab));
  }

  for (const auto& n : array_member(doc, "nodes")) {
    if (!n.is_object()) schema_error("nodes", "node entries must be objects");
    reject_unknown(n, {"id", "tab", "kind", "config"}, "node");
    FlowNode node;
    node.id = string_member(n, "id", "node");
    const std::string where = "node " + node.id;
    node.tab = string_member(n, "tab", where);
    node.kind = string_member(n, "kind", where);
    if (auto it = n.find("config"); it != n.end()) {
      if (!it->is_object()) schema_error(node.id, "config of node '" + node.id + "' must be an object");
      for (const auto& [key, value] : it->items()) node.config[key] = config_value(value, key, node.id);
    }
    flow.nodes.push_back(std::move(node));
  }

  for (const auto& w : array_member(doc, "wires")) {
    if (!w.is_object()) schema_error("wires", "wire entries must be objects");
    reject_unknown(w, {"from", "to"}, "wire");
    flow.wires.push_back(Wire{string_member(w, "from", "wire"), string_member(w, "to", "wire")});
  }
  return flow;
}

FlowGraph parse_flow(std::string_view text) {
  FlowGraph flow = parse_flow_structure(text);
  if (auto violations = validate(flow); !violations.empty()) {
    const Violation& v = violations.front();
    throw FlowError(FlowError::Code::Semantic, v.subject,
                    std::string(to_string(v.code)) + " '" + v.subject + "': " + v.detail);
  }
  return flow;
}

std::string serialize_flow(const FlowGraph& flow, int indent) {
  json doc = {{"tabs", json::array()}, {"nodes", json::array()}, {"wires", json::array()}};
  for (const auto& t : flow.tabs)
    doc["tabs"].push_back({{"id", t.id}, {"name", t.name}, {"offloadable", t.offloadable}});
  for (const auto& n : flow.nodes) {
    json config = json::object();
    for (const auto& [k, v] : n.config) config[k] = v;
    doc["nodes"].push_back({{"id", n.id}, {"tab", n.tab}, {"kind", n.kind}, {"config", config}});
  }
  for (const auto& w : flow.wires) doc["wires"].push_back({{"from", w.from}, {"to", w.to}});
  return doc.dump(indent) + (indent >= 0 ? "\n" : "");
}

}  // namespace edgeflow
