#include "h3d/error.hpp"

namespace h3d {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyName: return "empty_name";
    case ErrorCode::kDuplicateSite: return "duplicate_site";
    case ErrorCode::kSiteNotFound: return "site_not_found";
    case ErrorCode::kSiteHasNoImages: return "site_has_no_images";
    case ErrorCode::kInvalidAzimuth: return "invalid_azimuth";
    case ErrorCode::kUndecodableImage: return "undecodable_image";
    case ErrorCode::kAssetNotFound: return "asset_not_found";
    case ErrorCode::kTemplateNotFound: return "template_not_found";
    case ErrorCode::kTemplateSyntax: return "template_syntax";
    case ErrorCode::kUnknownField: return "unknown_field";
    case ErrorCode::kMissingRequiredAttribute: return "missing_required_attribute";
    case ErrorCode::kProfileNotFound: return "profile_not_found";
    case ErrorCode::kInvalidProfile: return "invalid_profile";
    case ErrorCode::kBackendUnreachable: return "backend_unreachable";
    case ErrorCode::kBackendRejected: return "backend_rejected";
    case ErrorCode::kBackendTimeout: return "backend_timeout";
    case ErrorCode::kInvalidOutput: return "invalid_output";
    case ErrorCode::kMalformedAsset: return "malformed";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kInvalidDocument: return "invalid_document";
    case ErrorCode::kNoVertices: return "no_vertices";
    case ErrorCode::kJobNotFound: return "job_not_found";
    case ErrorCode::kJobTerminal: return "job_terminal";
    case ErrorCode::kJobNotFailed: return "job_not_failed";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kMismatchedSummary: return "mismatched_summary";
    case ErrorCode::kModelNotFound: return "model_not_found";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kSiteNotFound:
    case ErrorCode::kAssetNotFound:
    case ErrorCode::kTemplateNotFound:
    case ErrorCode::kProfileNotFound:
    case ErrorCode::kJobNotFound:
    case ErrorCode::kModelNotFound:
      return 404;
    case ErrorCode::kDuplicateSite:
    case ErrorCode::kJobTerminal:
    case ErrorCode::kJobNotFailed:
      return 409;
    case ErrorCode::kSiteHasNoImages:
    case ErrorCode::kMissingRequiredAttribute:
      return 422;
    case ErrorCode::kBackendUnreachable:
    case ErrorCode::kBackendRejected:
    case ErrorCode::kInvalidOutput:
      return 502;
    case ErrorCode::kBackendTimeout:
      return 504;
    case ErrorCode::kIo:
    case ErrorCode::kInternal:
      return 500;
    default:
      return 400;
  }
}

}  // namespace h3d
