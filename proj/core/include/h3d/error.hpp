#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace h3d {

// Machine-readable failure vocabulary shared by the library, the CLI and the
// HTTP service. The wire names returned by code_name() are stable.
enum class ErrorCode {
  kInvalidArgument,
  kEmptyName,
  kDuplicateSite,
  kSiteNotFound,
  kSiteHasNoImages,
  kInvalidAzimuth,
  kUndecodableImage,
  kAssetNotFound,
  kTemplateNotFound,
  kTemplateSyntax,
  kUnknownField,
  kMissingRequiredAttribute,
  kProfileNotFound,
  kInvalidProfile,
  kBackendUnreachable,
  kBackendRejected,
  kBackendTimeout,
  kInvalidOutput,
  kMalformedAsset,
  kUnsupportedVersion,
  kInvalidDocument,
  kNoVertices,
  kJobNotFound,
  kJobTerminal,
  kJobNotFailed,
  kEmptyInput,
  kMismatchedSummary,
  kModelNotFound,
  kIo,
  kInternal,
};

std::string_view code_name(ErrorCode code) noexcept;

// HTTP status that a given code maps to: 4xx for caller faults, 5xx for
// backend or internal faults.
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace h3d
