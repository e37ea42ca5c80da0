#pragma once

// Small JSON-over-HTTP helper shared by the remote backends.

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "json.hpp"

namespace notai::detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

// Throws Error{InvalidArgument} on a URL without scheme and host.
Endpoint parse_endpoint(const std::string& url);

struct HttpReply {
  int status = 0;
  std::string body;
};

// Caps concurrent requests per backend.
class InFlightLimit {
 public:
  explicit InFlightLimit(std::ptrdiff_t max) : sem_(max) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<1024> sem_;
};

// POSTs a JSON body. Throws Error{BackendUnavailable} on connection failure,
// timeout or a 5xx status and Error{BackendProtocol} on any other non-200.
HttpReply post_json(const Endpoint& endpoint, const nlohmann::json& body, int timeout_ms,
                    InFlightLimit* limit, const std::string& bearer_token = {});

// Parses a reply body, throwing Error{BackendProtocol} on malformed JSON.
nlohmann::json parse_reply(const HttpReply& reply);

}  // namespace notai::detail
