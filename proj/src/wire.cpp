#include "httplib.h"
#include "json.hpp"
#include "kgreason/error.hpp"
#include "kgreason/gateway.hpp"

namespace kgreason {

namespace {

// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "endpoint must be an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

WireBackend::WireBackend(WireConfig config) : config_(std::move(config)) {
  std::tie(scheme_host_port_, path_) = split_url(config_.endpoint);
  in_flight_ = std::make_unique<std::counting_semaphore<>>(std::max(1, config_.max_in_flight));
}

WireBackend::~WireBackend() = default;

std::string WireBackend::request_body(const CompletionRequest& request) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.decoding.temperature;
  body["max_tokens"] = request.decoding.max_tokens;
  body["stop"] = request.decoding.stop;
  return body.dump();
}

std::string WireBackend::parse_response(const std::string& body) {
  try {
    auto json = nlohmann::json::parse(body);
    const auto& content = json.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kTransport, std::string("unparseable completion response: ") + e.what());
  }
}

std::string WireBackend::complete(const CompletionRequest& request) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{*in_flight_};

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

  auto result = client.Post(path_, headers, request_body(request), "application/json");
  if (!result) {
    throw Error(ErrorCode::kTransport,
                "request to " + config_.endpoint + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorCode::kTransport, "endpoint returned HTTP " + std::to_string(result->status) +
                                           ": " + result->body.substr(0, 200));
  }
  return parse_response(result->body);
}

}  // namespace kgreason
