#include "geonorm/error.hpp"

namespace geonorm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::DegenerateSecondMoments: return "DegenerateSecondMoments";
    case ErrorCode::DegenerateRadius: return "DegenerateRadius";
    case ErrorCode::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::NegativeDeterminant: return "NegativeDeterminant";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UndefinedDirection: return "UndefinedDirection";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
  }
  return "Unknown";
}

}  // namespace geonorm
