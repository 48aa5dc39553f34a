#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ripdet {

enum class ErrorCode {
  kMalformedJson,
  kMissingField,
  kDuplicateImageId,
  kUnknownImageRef,
  kMultipleCategories,
  kCategoryMismatch,
  kWrongPayloadKind,
  kScoreOutOfRange,
  kDegenerateBox,
  kDegenerateRing,
  kDegenerateMask,
  kInvalidPolygon,
  kRleUnsupported,
  kBoxOutOfImage,
  kDimensionMismatch,
  kEmptyMask,
  kWeightMismatch,
  kEmptyInput,
  kInvalidArgument,
  kIoError,
  kUnknownPreset,
  kInvalidConfig,
  // Warning-only codes.
  kBoxOverhang,
  kIgnoredPayload,
  kInstanceCapExceeded,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// map them onto exit codes and validation report entries.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ripdet
