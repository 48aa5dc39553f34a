#include "ripdet/error.hpp"

namespace ripdet {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson: return "MalformedJson";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kDuplicateImageId: return "DuplicateImageId";
    case ErrorCode::kUnknownImageRef: return "UnknownImageRef";
    case ErrorCode::kMultipleCategories: return "MultipleCategories";
    case ErrorCode::kCategoryMismatch: return "CategoryMismatch";
    case ErrorCode::kWrongPayloadKind: return "WrongPayloadKind";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kDegenerateRing: return "DegenerateRing";
    case ErrorCode::kDegenerateMask: return "DegenerateMask";
    case ErrorCode::kInvalidPolygon: return "InvalidPolygon";
    case ErrorCode::kRleUnsupported: return "RleUnsupported";
    case ErrorCode::kBoxOutOfImage: return "BoxOutOfImage";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUnknownPreset: return "UnknownPreset";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kBoxOverhang: return "BoxOverhang";
    case ErrorCode::kIgnoredPayload: return "IgnoredPayload";
    case ErrorCode::kInstanceCapExceeded: return "InstanceCapExceeded";
  }
  return "Unknown";
}

}  // namespace ripdet
