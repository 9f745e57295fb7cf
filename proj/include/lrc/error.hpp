#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrc {

enum class ErrorCode {
  InvalidArgument,
  FewerThanKCommonPeaks,
  EigenFailure,
  UnstableSimulation,
  SingularSystem,
  FrequencyMismatch,
  ZeroReference,
  InfeasibleLambdas,
  AllRestartsFailed,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells the failure apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace lrc
