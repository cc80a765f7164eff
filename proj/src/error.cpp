#include "wbseg/error.hpp"

namespace wbseg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::PayloadSizeMismatch: return "PayloadSizeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::StrokeOutsideMask: return "StrokeOutsideMask";
    case ErrorCode::ConflictingLabels: return "ConflictingLabels";
    case ErrorCode::TargetTooSmall: return "TargetTooSmall";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::StrokesMissingClass: return "StrokesMissingClass";
    case ErrorCode::ProductKernelNeedsSpatial: return "ProductKernelNeedsSpatial";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::NoSegmentationYet: return "NoSegmentationYet";
    case ErrorCode::MalformedVolume: return "MalformedVolume";
  }
  return "Unknown";
}

bool is_io_error(ErrorCode code) { return code == ErrorCode::IoFailure; }

}  // namespace wbseg
