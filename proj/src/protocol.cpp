#include "edgeflow/protocol.hpp"

#include <cctype>
#include <nlohmann/json.hpp>

namespace edgeflow::remote {

using nlohmann::json;

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

std::string percent_decode(std::string_view text) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      int hi = hex(text[i + 1]), lo = hex(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += text[i];
  }
  return out;
}

std::string flow_path(std::string_view flow_id) {
  return std::string(kFlowsPath) + "/" + percent_encode(flow_id);
}

std::string execute_path(std::string_view flow_id) { return flow_path(flow_id) + "/execute"; }

namespace {

json parse_body(std::string_view body) {
  try {
    json doc = json::parse(body.begin(), body.end());
    if (!doc.is_object()) throw ProtocolError("body must be a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed body: ") + e.what());
  }
}

Payload payload_of(const json& doc) {
  Payload p;
  auto it = doc.find("payload");
  if (it == doc.end()) return p;
  if (!it->is_object()) throw ProtocolError("'payload' must be an object");
  for (const auto& [k, v] : it->items()) {
    if (!v.is_string()) throw ProtocolError("payload value '" + k + "' must be a string");
    p[k] = v.get<std::string>();
  }
  return p;
}

JobId job_id_of(const json& doc, bool required) {
  auto it = doc.find("job_id");
  if (it == doc.end()) {
    if (required) throw ProtocolError("missing 'job_id'");
    return 0;
  }
  if (!it->is_number_integer()) throw ProtocolError("'job_id' must be an integer");
  return it->get<JobId>();
}

double number_of(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) return 0.0;
  if (!it->is_number()) throw ProtocolError(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

std::string encode_request(const OffloadRequest& r) {
  return json{{"job_id", r.job_id}, {"payload", r.payload}, {"sent_at", r.sent_at}}.dump();
}

OffloadRequest decode_request(std::string_view flow_id, std::string_view body) {
  json doc = parse_body(body);
  OffloadRequest r;
  r.flow_id = std::string(flow_id);
  r.job_id = job_id_of(doc, true);
  r.payload = payload_of(doc);
  r.sent_at = number_of(doc, "sent_at");
  return r;
}

std::string encode_response(const OffloadResponse& r) {
  if (r.status == ResponseStatus::Error)
    return json{{"job_id", r.job_id}, {"status", "error"}, {"error_detail", r.error_detail}}.dump();
  return json{{"job_id", r.job_id}, {"status", "ok"}, {"payload", r.payload}, {"remote_duration_s", r.remote_duration_s}}
      .dump();
}

OffloadResponse decode_response(std::string_view body) {
  json doc = parse_body(body);
  auto status = doc.find("status");
  if (status == doc.end() || !status->is_string()) throw ProtocolError("missing 'status'");
  OffloadResponse r;
  r.job_id = job_id_of(doc, false);
  if (*status == "ok") {
    r.status = ResponseStatus::Ok;
    r.payload = payload_of(doc);
    r.remote_duration_s = number_of(doc, "remote_duration_s");
    if (r.remote_duration_s < 0.0) throw ProtocolError("'remote_duration_s' must be >= 0");
  } else if (*status == "error") {
    r.status = ResponseStatus::Error;
    auto detail = doc.find("error_detail");
    if (detail != doc.end() && detail->is_string()) r.error_detail = detail->get<std::string>();
  } else {
    throw ProtocolError("unknown status '" + status->dump() + "'");
  }
  return r;
}

std::string encode_deployed(std::string_view flow_id) { return json{{"flow_id", flow_id}}.dump(); }

std::string decode_deployed(std::string_view body) {
  json doc = parse_body(body);
  auto it = doc.find("flow_id");
  if (it == doc.end() || !it->is_string()) throw ProtocolError("missing 'flow_id'");
  return it->get<std::string>();
}

std::string encode_violations(const std::vector<Violation>& violations) {
  json list = json::array();
  for (const auto& v : violations)
    list.push_back({{"code", to_string(v.code)}, {"subject", v.subject}, {"detail", v.detail}});
  return json{{"violations", list}}.dump();
}

std::vector<Violation> decode_violations(std::string_view body) {
  static const ViolationCode kCodes[] = {
      ViolationCode::DuplicateId,    ViolationCode::DuplicateTabId,   ViolationCode::UnknownTab,
      ViolationCode::DanglingWire,   ViolationCode::SelfWire,         ViolationCode::DanglingLink,
      ViolationCode::MultipleOffloadableTabs, ViolationCode::MissingConfig, ViolationCode::InvalidConfig,
      ViolationCode::MissingEntry,   ViolationCode::MissingExit};
  json doc = parse_body(body);
  auto it = doc.find("violations");
  if (it == doc.end() || !it->is_array()) throw ProtocolError("missing 'violations'");
  std::vector<Violation> out;
  for (const auto& v : *it) {
    Violation violation{ViolationCode::InvalidConfig, v.value("subject", ""), v.value("detail", "")};
    const std::string code = v.value("code", "");
    for (auto c : kCodes)
      if (to_string(c) == code) violation.code = c;
    out.push_back(std::move(violation));
  }
  return out;
}

}  // namespace edgeflow::remote
