#pragma once

#include <stdexcept>
#include <string>

namespace radipose {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateUndistortion,
  kNoRealRoot,
  kGradientDegenerate,
  kDegenerateSample,
  kSingularA0,
  kNoRealSolutions,
  kDegenerateFocal,
  kNoCheiralityWinner,
  kNotEnoughCorrespondences,
  kNoModelFound,
  kDecompositionFailed,
  kEmptyInput,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; code() identifies
// the failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace radipose
