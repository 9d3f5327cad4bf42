#include "ctrace/error.hpp"

namespace ctrace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveBeta: return "NonPositiveBeta";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::PmfNotNormalized: return "PmfNotNormalized";
    case ErrorCode::MissingGeneralTables: return "MissingGeneralTables";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::StateCapExceeded: return "StateCapExceeded";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ZeroReplicates: return "ZeroReplicates";
    case ErrorCode::NonTerminatingGeneralModel: return "NonTerminatingGeneralModel";
    case ErrorCode::TooManyTypes: return "TooManyTypes";
    case ErrorCode::ForestCapExceeded: return "ForestCapExceeded";
    case ErrorCode::VariantMismatch: return "VariantMismatch";
    case ErrorCode::AlphaZero: return "AlphaZero";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ctrace
