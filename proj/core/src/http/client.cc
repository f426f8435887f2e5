#include "promptlens/http/client.h"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <optional>
#include <thread>

#include "promptlens/common/error.h"

namespace promptlens::http {

namespace {

struct Permit {
  explicit Permit(Semaphore& s) : s_(s) { s_.Acquire(); }
  ~Permit() { s_.Release(); }
  Semaphore& s_;
};

bool Retryable(int status) { return status == 429 || status >= 500; }

std::optional<int> RetryAfter(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return std::nullopt;
  const std::string v = res.get_header_value("Retry-After");
  char* end = nullptr;
  const long secs = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || secs < 0) return std::nullopt;
  return static_cast<int>(secs);
}

}  // namespace

ParsedUrl ParseUrl(std::string_view url) {
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "not an absolute URL: '" + std::string(url) + "'");
  }
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kInvalidArgument, "unsupported URL scheme in '" + std::string(url) + "'");
  }
  const size_t host_begin = scheme_end + 3;
  const size_t path_begin = url.find('/', host_begin);
  ParsedUrl out;
  out.origin = std::string(url.substr(0, path_begin));
  out.path = path_begin == std::string_view::npos ? "/" : std::string(url.substr(path_begin));
  if (out.origin.size() <= host_begin) {
    throw Error(ErrorCode::kInvalidArgument, "URL has no host: '" + std::string(url) + "'");
  }
  return out;
}

void Semaphore::Acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return permits_ > 0; });
  --permits_;
}

void Semaphore::Release() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++permits_;
  }
  cv_.notify_one();
}

JsonClient::JsonClient(EndpointConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_shared<Semaphore>(config_.max_in_flight)) {
  ParseUrl(config_.url);
}

std::string JsonClient::Post(const std::string& body) const { return Send(config_.url, &body); }

std::string JsonClient::Get(const std::string& url) const { return Send(url, nullptr); }

std::string JsonClient::Send(const std::string& url, const std::string* body) const {
  const ParsedUrl target = ParseUrl(url);
  Permit permit(*in_flight_);
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

  const int attempts_allowed = 1 + std::max(0, config_.max_retries);
  int backoff = config_.backoff_ms;
  for (int attempt = 1;; ++attempt) {
    httplib::Client cli(target.origin);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Result res = body ? cli.Post(target.path, headers, *body, "application/json")
                               : cli.Get(target.path, headers);
    std::optional<int> retry_after;
    if (!res) {
      const std::string why = httplib::to_string(res.error());
      if (attempt >= attempts_allowed) {
        throw TransportError(url + ": " + why, attempt);
      }
      spdlog::debug("{}: {} (attempt {})", url, why, attempt);
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else {
      retry_after = RetryAfter(*res);
      if (!Retryable(res->status) || attempt >= attempts_allowed) {
        throw EndpointError(url + " answered " + std::to_string(res->status), res->status, attempt,
                            retry_after, res->body);
      }
      spdlog::debug("{}: status {} (attempt {})", url, res->status, attempt);
    }
    int wait = retry_after ? *retry_after * 1000 : backoff;
    wait = std::min(wait, config_.max_backoff_ms);
    std::this_thread::sleep_for(std::chrono::milliseconds(wait));
    backoff *= 2;
  }
}

std::string EnvOr(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace promptlens::http
