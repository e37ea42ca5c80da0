#include "http_client.hpp"

#include "httplib.h"
#include "notai/error.hpp"

namespace notai::detail {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || scheme == 0) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must be an absolute URL: " + url);
  }
  const auto path = url.find('/', scheme + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path);
  ep.path = path == std::string::npos ? "/" : url.substr(path);
  if (ep.origin.size() <= scheme + 3) {
    throw Error(ErrorCode::InvalidArgument, "endpoint has no host: " + url);
  }
  return ep;
}

HttpReply post_json(const Endpoint& endpoint, const nlohmann::json& body, int timeout_ms,
                    InFlightLimit* limit, const std::string& bearer_token) {
  struct Guard {
    InFlightLimit* l;
    ~Guard() {
      if (l) l->release();
    }
  };
  if (limit) limit->acquire();
  Guard guard{limit};

  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::milliseconds(timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnavailable,
                endpoint.origin + endpoint.path + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw Error(ErrorCode::BackendUnavailable,
                endpoint.origin + endpoint.path + " returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendProtocol,
                endpoint.origin + endpoint.path + " returned HTTP " + std::to_string(res->status));
  }
  return {res->status, res->body};
}

nlohmann::json parse_reply(const HttpReply& reply) {
  try {
    return nlohmann::json::parse(reply.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendProtocol, std::string("malformed JSON reply: ") + e.what());
  }
}

}  // namespace notai::detail
