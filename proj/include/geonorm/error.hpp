#pragma once

#include <stdexcept>
#include <string>

namespace geonorm {

enum class ErrorCode {
  ZeroMass,
  DegenerateSecondMoments,
  DegenerateRadius,
  DenominatorVanishes,
  Singular,
  NegativeDeterminant,
  NoConvergence,
  UndefinedDirection,
  InvalidArgument,
  IoError,
  MalformedHeader,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geonorm
