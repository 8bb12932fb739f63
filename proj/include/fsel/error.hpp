#pragma once

#include <stdexcept>
#include <string>

namespace fsel {

enum class ErrorKind {
  kInvalidInput,
  kDimensionMismatch,
  kNotPositiveDefinite,
  kLinearizationFailure,
  kCrossCovarianceInconsistency,
  kDegenerateObservation,
  kFusionShape,
  kUndefinedGap,
  kPropagationAbort,
  kConfig,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fsel
