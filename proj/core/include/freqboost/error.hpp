#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freqboost {

enum class ErrorCode {
  invalid_argument,
  state_space_too_large,
  reducible_chain,
  target_unavailable,
  not_converged,
  io,
  parse,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::state_space_too_large: return "state_space_too_large";
    case ErrorCode::reducible_chain: return "reducible_chain";
    case ErrorCode::target_unavailable: return "target_unavailable";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace freqboost
