#pragma once

#include <cstddef>
#include <string>

namespace sugar {

struct HttpEndpoint {
  /// Full URL, e.g. "http://127.0.0.1:8000/v1/completions".
  std::string url;
  std::string api_key;
  int timeout_ms = 30000;
  /// Retries after the first attempt, for connection errors, 429 and 5xx.
  std::size_t max_retries = 2;
  int retry_backoff_ms = 200;
};

/// POSTs a JSON body and returns the response body. Throws
/// Errc::backend_unreachable once retries are exhausted or on a non-retryable
/// HTTP status.
std::string post_json(const HttpEndpoint& endpoint, const std::string& body);

}  // namespace sugar
