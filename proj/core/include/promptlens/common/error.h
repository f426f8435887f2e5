#ifndef PROMPTLENS_COMMON_ERROR_H_
#define PROMPTLENS_COMMON_ERROR_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace promptlens {

// Machine-readable error categories. The service maps these onto HTTP
// status codes; the CLI prints CodeName() alongside the message.
enum class ErrorCode {
  kInvalidArgument,
  kFailedPrecondition,
  kOutOfRange,
  kNotFound,
  kAlreadyExists,
  kConflict,
  kParse,
  kMissingCategory,
  kExhausted,
  kUndefined,
  kTransport,
  kEndpoint,
  kIo,
};

std::string_view CodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Connection-level failure (refused, timeout, DNS). `attempts` is the number
// of tries made before giving up.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts)
      : Error(ErrorCode::kTransport, message), attempts_(attempts) {}

  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// The endpoint answered with a non-success status.
class EndpointError : public Error {
 public:
  EndpointError(const std::string& message, int status, int attempts,
                std::optional<int> retry_after_seconds, std::string body)
      : Error(ErrorCode::kEndpoint, message),
        status_(status),
        attempts_(attempts),
        retry_after_seconds_(retry_after_seconds),
        body_(std::move(body)) {}

  int status() const { return status_; }
  int attempts() const { return attempts_; }
  std::optional<int> retry_after_seconds() const { return retry_after_seconds_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  int attempts_;
  std::optional<int> retry_after_seconds_;
  std::string body_;
};

}  // namespace promptlens

#endif  // PROMPTLENS_COMMON_ERROR_H_
