#ifndef QOE_CORE_ERRORS_HPP
#define QOE_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qoe {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MalformedHar,
  NegativeTiming,
  NoSegmentsFound,
  MissingDurations,
  NonMonotoneArrivals,
  EmptyTrace,
  BadStallSyntax,
  UnsupportedMode,
  ExternalToolFailure,
  SchemaMismatch,
  ProfileSyntax,
  MissingDirection,
  DegenerateProfile,
  OutOfRange,
  HeaderMismatch,
  RowParse,
  NotCleaned,
  TooFewRows,
  SingularDesign,
  EmptyTrain,
  FeatureMismatch,
  LengthMismatch,
  Internal,
};

const char* error_code_name(ErrorCode code);

class QoeError : public std::runtime_error {
 public:
  QoeError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw QoeError(code, message);
}

}  // namespace qoe

#endif  // QOE_CORE_ERRORS_HPP
