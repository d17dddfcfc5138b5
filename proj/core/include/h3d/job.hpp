#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "h3d/asset_store.hpp"
#include "h3d/catalog.hpp"
#include "h3d/prompt.hpp"

namespace h3d {

enum class Stage { kAcquire, kPrompt, kSynthesize2D, kGenerate3D, kPublish, kDone, kFailed };

inline constexpr Stage kPipelineStages[] = {Stage::kAcquire, Stage::kPrompt, Stage::kSynthesize2D,
                                            Stage::kGenerate3D, Stage::kPublish};

std::string_view stage_name(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;
bool is_terminal(Stage s) noexcept;
// Stage that follows `s` on success; kDone after kPublish.
Stage next_stage(Stage s) noexcept;

struct StageTiming {
  Stage stage = Stage::kAcquire;
  double elapsed_s = 0.0;
  std::string started_at;
  bool succeeded = true;

  friend bool operator==(const StageTiming&, const StageTiming&) = default;
};

struct JobConfig {
  std::string template_id = "default";
  std::string image_profile = "mock-image";
  std::string mesh_profile = "mock-mesh";
  bool auto_decimate = false;

  friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

struct GenerationJob {
  std::string job_id;
  std::string site_id;
  JobConfig config;
  Stage stage = Stage::kAcquire;
  std::optional<Stage> failed_stage;
  std::vector<std::string> acquired_images;  // asset ids snapshotted by Acquire
  std::optional<double> coverage_deg;
  std::optional<PromptText> prompt;
  std::optional<AssetRef> iso_image;
  std::optional<AssetRef> mesh;
  std::optional<std::size_t> triangle_count;
  std::optional<std::string> published_dir;
  std::vector<StageTiming> timings;
  std::optional<std::string> error;
  std::vector<std::string> log;
  std::string created_at;
  std::string updated_at;

  double total_elapsed_s() const;
  std::optional<double> elapsed_of(Stage s) const;

  friend bool operator==(const GenerationJob&, const GenerationJob&) = default;
};

}  // namespace h3d
