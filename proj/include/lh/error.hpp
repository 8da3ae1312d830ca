#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lh {

enum class ErrorKind {
  MalformedHeader,
  SizeMismatch,
  InvalidClassValue,
  NonFiniteValue,
  IoFailure,
  InvalidArgument,
  MetaMismatch,
  AnisotropicInPlaneSpacing,
  EmptyLesion,
  OverlappingLesions,
  EmptyMask,
  MissingLabelSource,
  EmptyCohort,
  DegenerateIntensities,
  ModeMismatch,
  SpecInfeasible,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lh
