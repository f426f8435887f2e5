#ifndef PROMPTLENS_HTTP_CLIENT_H_
#define PROMPTLENS_HTTP_CLIENT_H_

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace promptlens::http {

struct EndpointConfig {
  std::string url;    // "http://host:port/path" or "https://..."
  std::string token;  // sent as "Authorization: Bearer <token>" when set
  int timeout_ms = 30000;
  int max_retries = 2;  // extra attempts after the first
  int backoff_ms = 200;  // doubled per retry unless Retry-After is given
  int max_backoff_ms = 5000;
  int max_in_flight = 4;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

// Throws Error(kInvalidArgument) for anything but an absolute http(s) URL.
ParsedUrl ParseUrl(std::string_view url);

// Bounds concurrent requests.
class Semaphore {
 public:
  explicit Semaphore(int permits) : permits_(permits < 1 ? 1 : permits) {}
  void Acquire();
  void Release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int permits_;
};

// JSON-over-HTTP client for one endpoint. Thread-safe. Connection failures
// and 429/5xx responses are retried; the final failure surfaces as
// TransportError or EndpointError carrying the attempt count and any
// Retry-After hint.
class JsonClient {
 public:
  explicit JsonClient(EndpointConfig config);

  const EndpointConfig& config() const { return config_; }

  // POSTs `body` to the configured URL; returns the response body.
  std::string Post(const std::string& body) const;
  // GETs an absolute URL (image payloads given by URL).
  std::string Get(const std::string& url) const;

 private:
  std::string Send(const std::string& url, const std::string* body) const;

  EndpointConfig config_;
  mutable std::shared_ptr<Semaphore> in_flight_;
};

// Value of an environment variable, or `fallback` when unset or empty.
std::string EnvOr(const char* name, const std::string& fallback = {});

}  // namespace promptlens::http

#endif  // PROMPTLENS_HTTP_CLIENT_H_
