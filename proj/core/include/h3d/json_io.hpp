#pragma once

#include <nlohmann/json.hpp>

#include "h3d/asset_store.hpp"
#include "h3d/catalog.hpp"
#include "h3d/job.hpp"
#include "h3d/mesh.hpp"
#include "h3d/prompt.hpp"

// JSON forms used by the catalog documents, the job journal and the HTTP API.
// nlohmann::json objects keep keys sorted, so dumps are stable.
namespace h3d {

nlohmann::json to_json(const AssetRef& ref);
AssetRef asset_ref_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CaptureMeta& meta);
CaptureMeta capture_meta_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SiteRecord& site);
SiteRecord site_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ReadinessReport& r);

nlohmann::json to_json(const AttributeSet& a);

nlohmann::json to_json(const PromptText& p);
PromptText prompt_text_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StageTiming& t);
StageTiming stage_timing_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JobConfig& c);
JobConfig job_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GenerationJob& job);
GenerationJob job_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ValidationReport& r);

}  // namespace h3d
