#include "lrc/error.hpp"

namespace lrc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FewerThanKCommonPeaks: return "FewerThanKCommonPeaks";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::UnstableSimulation: return "UnstableSimulation";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::FrequencyMismatch: return "FrequencyMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::InfeasibleLambdas: return "InfeasibleLambdas";
    case ErrorCode::AllRestartsFailed: return "AllRestartsFailed";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace lrc
