#include "core/errors.hpp"

namespace qoe {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedHar: return "MalformedHar";
    case ErrorCode::NegativeTiming: return "NegativeTiming";
    case ErrorCode::NoSegmentsFound: return "NoSegmentsFound";
    case ErrorCode::MissingDurations: return "MissingDurations";
    case ErrorCode::NonMonotoneArrivals: return "NonMonotoneArrivals";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::BadStallSyntax: return "BadStallSyntax";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::ExternalToolFailure: return "ExternalToolFailure";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ProfileSyntax: return "ProfileSyntax";
    case ErrorCode::MissingDirection: return "MissingDirection";
    case ErrorCode::DegenerateProfile: return "DegenerateProfile";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::RowParse: return "RowParse";
    case ErrorCode::NotCleaned: return "NotCleaned";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::EmptyTrain: return "EmptyTrain";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace qoe
