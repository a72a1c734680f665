#include "radipose/errors.h"

namespace radipose {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateUndistortion: return "DegenerateUndistortion";
    case ErrorCode::kNoRealRoot: return "NoRealRoot";
    case ErrorCode::kGradientDegenerate: return "GradientDegenerate";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kSingularA0: return "SingularA0";
    case ErrorCode::kNoRealSolutions: return "NoRealSolutions";
    case ErrorCode::kDegenerateFocal: return "DegenerateFocal";
    case ErrorCode::kNoCheiralityWinner: return "NoCheiralityWinner";
    case ErrorCode::kNotEnoughCorrespondences: return "NotEnoughCorrespondences";
    case ErrorCode::kNoModelFound: return "NoModelFound";
    case ErrorCode::kDecompositionFailed: return "DecompositionFailed";
    case ErrorCode::kEmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace radipose
