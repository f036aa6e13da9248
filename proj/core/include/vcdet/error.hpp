#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace vcdet {

/// Broad failure class. The CLI maps each one to a stable exit code.
enum class ErrorKind {
  Input,     ///< missing/malformed files, schema violations, bad geometry in inputs
  Config,    ///< invalid run parameters or incompatible components
  Provider,  ///< perception provider failed or misbehaved
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Carries the protocol error code (e.g. "BOX", "IMG") and the id of the
/// request that failed, -1 when not tied to a request.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::string code = "PROVIDER", long long request_id = -1)
      : Error(ErrorKind::Provider, what), code_(std::move(code)), request_id_(request_id) {}
  const std::string& code() const noexcept { return code_; }
  long long request_id() const noexcept { return request_id_; }

 private:
  std::string code_;
  long long request_id_;
};

}  // namespace vcdet
