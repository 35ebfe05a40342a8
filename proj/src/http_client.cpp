#include "sugar/http.hpp"

#include <chrono>
#include <string_view>
#include <thread>

#include "httplib.h"
#include "sugar/error.hpp"

namespace sugar {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::config_error, "backend url must include a scheme: " + url);
  }
  const auto scheme = std::string_view(url).substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(Errc::config_error, "unsupported url scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string post_json(const HttpEndpoint& endpoint, const std::string& body) {
  const auto [origin, path] = split_url(endpoint.url);

  httplib::Client client(origin);
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!endpoint.api_key.empty()) client.set_bearer_token_auth(endpoint.api_key);

  std::string last_failure;
  std::size_t attempts = 0;
  for (std::size_t attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    ++attempts;
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(endpoint.retry_backoff_ms * (1 << (attempt - 1))));
    }
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_failure = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) break;
  }
  throw Error(Errc::backend_unreachable,
              "POST " + endpoint.url + " failed after " + std::to_string(attempts) +
                  " attempt(s): " + last_failure);
}

}  // namespace sugar
