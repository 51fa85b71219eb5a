// Offload wire protocol, independent of the transport that carries it.
//
//   POST /flows                 body: flow document
//        201 {"flow_id": "<tab-id>"}   422 {"violations": [...]}
//   POST /flows/{flow_id}/execute
//        body {"job_id": <int>, "payload": {<string>: <string>}, "sent_at": <number>}
//        200 {"job_id": <int>, "status": "ok", "payload": {...}, "remote_duration_s": <number>}
//        200 {"job_id": <int>, "status": "error", "error_detail": "..."}
//        404 unknown flow_id
//   GET  /flows/{flow_id}       200 flow document, 404 otherwise
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/engine.hpp"
#include "edgeflow/flow.hpp"

namespace edgeflow::remote {

struct OffloadRequest {
  JobId job_id = 0;
  std::string flow_id;
  Payload payload;
  double sent_at = 0.0;

  bool operator==(const OffloadRequest&) const = default;
};

enum class ResponseStatus { Ok, Error };

/// Error responses carry an empty payload and zero duration.
struct OffloadResponse {
  JobId job_id = 0;
  Payload payload;
  double remote_duration_s = 0.0;
  ResponseStatus status = ResponseStatus::Ok;
  std::string error_detail;

  bool operator==(const OffloadResponse&) const = default;

  static OffloadResponse error(JobId job, std::string detail) {
    return {job, {}, 0.0, ResponseStatus::Error, std::move(detail)};
  }
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kFlowsPath = "/flows";
inline constexpr std::string_view kUnknownFlow = "unknown flow";

std::string percent_encode(std::string_view text);
std::string percent_decode(std::string_view text);

std::string flow_path(std::string_view flow_id);
std::string execute_path(std::string_view flow_id);

/// Body of an execute call; the flow id travels in the path.
std::string encode_request(const OffloadRequest& request);
OffloadRequest decode_request(std::string_view flow_id, std::string_view body);

std::string encode_response(const OffloadResponse& response);
OffloadResponse decode_response(std::string_view body);

std::string encode_deployed(std::string_view flow_id);
std::string decode_deployed(std::string_view body);

std::string encode_violations(const std::vector<Violation>& violations);
std::vector<Violation> decode_violations(std::string_view body);

}  // namespace edgeflow::remote
