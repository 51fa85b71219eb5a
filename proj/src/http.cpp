#include <httplib.h>

#include <nlohmann/json.hpp>

#include "edgeflow/remote.hpp"

namespace edgeflow::remote {

namespace {

constexpr const char* kJson = "application/json";

httplib::Client make_client(const RemoteEndpoint& endpoint) {
  httplib::Client client(endpoint.base_url);
  const auto connect = std::chrono::milliseconds(endpoint.connect_timeout_ms);
  const auto request = std::chrono::milliseconds(endpoint.request_timeout_ms);
  client.set_connection_timeout(connect);
  client.set_read_timeout(request);
  client.set_write_timeout(request);
  client.set_keep_alive(false);
  return client;
}

TransportFailure failure_of(const httplib::Result& result, const RemoteEndpoint& endpoint) {
  const auto error = result.error();
  const std::string detail = httplib::to_string(error) + " (" + endpoint.base_url + ")";
  switch (error) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
      return {FailureKind::Timeout, detail, {}};
    case httplib::Error::Connection:
    case httplib::Error::BindIPAddress:
    case httplib::Error::ProxyConnection:
      return {FailureKind::ConnectionFailed, detail, {}};
    default:
      return {FailureKind::Protocol, detail, {}};
  }
}

std::string error_body(std::string_view detail) { return nlohmann::json{{"error", detail}}.dump(); }

}  // namespace

HttpTransport::HttpTransport(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

std::string HttpTransport::deploy(const FlowGraph& flow) {
  auto client = make_client(endpoint_);
  auto result = client.Post(std::string(kFlowsPath), serialize_flow(flow, -1), kJson);
  if (!result) throw RemoteError(failure_of(result, endpoint_));
  try {
    if (result->status == 201) return decode_deployed(result->body);
    if (result->status == 422)
      throw RemoteError({FailureKind::Rejected, "remote flow failed validation", decode_violations(result->body)});
  } catch (const ProtocolError& e) {
    throw RemoteError({FailureKind::Protocol, e.what(), {}});
  }
  throw RemoteError({FailureKind::Protocol, "unexpected HTTP status " + std::to_string(result->status), {}});
}

void HttpTransport::execute(const OffloadRequest& request, std::function<void(ExecuteResult)> done) {
  auto client = make_client(endpoint_);
  auto result = client.Post(execute_path(request.flow_id), encode_request(request), kJson);
  if (!result) {
    done(failure_of(result, endpoint_));
    return;
  }
  if (result->status == 404) {
    done(TransportFailure{FailureKind::NotFound, std::string(kUnknownFlow), {}});
    return;
  }
  if (result->status != 200) {
    done(TransportFailure{FailureKind::Protocol, "unexpected HTTP status " + std::to_string(result->status), {}});
    return;
  }
  OffloadResponse response;
  try {
    response = decode_response(result->body);
  } catch (const ProtocolError& e) {
    done(TransportFailure{FailureKind::Protocol, e.what(), {}});
    return;
  }
  if (response.status == ResponseStatus::Error) response.job_id = request.job_id;
  if (response.job_id != request.job_id) {
    done(TransportFailure{FailureKind::Protocol,
                          "response job_id " + std::to_string(response.job_id) + " does not match request " +
                              std::to_string(request.job_id),
                          {}});
    return;
  }
  done(std::move(response));
}

std::optional<FlowGraph> HttpTransport::fetch(const std::string& flow_id) {
  auto client = make_client(endpoint_);
  auto result = client.Get(flow_path(flow_id));
  if (!result) throw RemoteError(failure_of(result, endpoint_));
  if (result->status == 404) return std::nullopt;
  if (result->status != 200)
    throw RemoteError({FailureKind::Protocol, "unexpected HTTP status " + std::to_string(result->status), {}});
  try {
    return parse_flow(result->body);
  } catch (const FlowError& e) {
    throw RemoteError({FailureKind::Protocol, e.what(), {}});
  }
}

// --- RemoteServer -------------------------------------------------------------

RemoteServer::RemoteServer(RemoteExecutor& executor)
    : executor_(executor), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

RemoteServer::~RemoteServer() { stop(); }

void RemoteServer::install_routes() {
  server_->Post(std::string(kFlowsPath), [this](const httplib::Request& req, httplib::Response& res) {
    FlowGraph flow;
    try {
      flow = parse_flow_structure(req.body);
    } catch (const FlowError& e) {
      res.status = 400;
      res.set_content(error_body(e.what()), kJson);
      return;
    }
    auto outcome = executor_.deploy(flow);
    if (outcome.ok()) {
      res.status = 201;
      res.set_content(encode_deployed(outcome.flow_id), kJson);
    } else {
      res.status = 422;
      res.set_content(encode_violations(outcome.violations), kJson);
    }
  });

  server_->Post(R"(/flows/([^/]+)/execute)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string flow_id = percent_decode(req.matches[1].str());
    OffloadRequest request;
    try {
      request = decode_request(flow_id, req.body);
    } catch (const ProtocolError& e) {
      res.status = 400;
      res.set_content(error_body(e.what()), kJson);
      return;
    }
    if (!executor_.has_flow(flow_id)) {
      res.status = 404;
      res.set_content(encode_response(OffloadResponse::error(request.job_id, std::string(kUnknownFlow))), kJson);
      return;
    }
    res.status = 200;
    res.set_content(encode_response(executor_.execute(request)), kJson);
  });

  server_->Get(R"(/flows/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto flow = executor_.find(percent_decode(req.matches[1].str()));
    if (!flow) {
      res.status = 404;
      res.set_content(error_body(kUnknownFlow), kJson);
      return;
    }
    res.status = 200;
    res.set_content(serialize_flow(*flow), kJson);
  });

  server_->set_logger([this](const httplib::Request& req, const httplib::Response& res) {
    ++served_;
    if (log_) log_(req.method + " " + req.path + " " + std::to_string(res.status));
  });
}

int RemoteServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host);
    bound_ = true;
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  bound_ = true;
  return port;
}

void RemoteServer::listen() { server_->listen_after_bind(); }

int RemoteServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void RemoteServer::stop() {
  if (!server_) return;
  if (bound_ && !thread_.joinable()) {
    // httplib closes the socket only from a running listen loop
    thread_ = std::thread([this] { listen(); });
    server_->wait_until_ready();
  }
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace edgeflow::remote
