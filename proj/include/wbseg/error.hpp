#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wbseg {

enum class ErrorCode {
  InvalidArgument,
  MalformedHeader,
  PayloadSizeMismatch,
  NonFiniteValue,
  IoFailure,
  IndexOutOfRange,
  EmptyMask,
  StrokeOutsideMask,
  ConflictingLabels,
  TargetTooSmall,
  KTooLarge,
  SingleClassInput,
  DegenerateLabels,
  ClassTooSmall,
  InvalidGeometry,
  ClassAbsent,
  StrokesMissingClass,
  ProductKernelNeedsSpatial,
  DimsMismatch,
  UnknownSession,
  SessionBusy,
  NoSegmentationYet,
  MalformedVolume,
};

std::string_view to_string(ErrorCode code);

// I/O failures map to CLI exit code 3, everything else to 2.
bool is_io_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wbseg
