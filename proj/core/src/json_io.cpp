#include "h3d/json_io.hpp"

#include "h3d/error.hpp"

namespace h3d {

using nlohmann::json;

namespace {

template <class T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T optional_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const AssetRef& ref) {
  return {{"asset_id", ref.asset_id},
          {"media_type", media_type_name(ref.media_type)},
          {"byte_length", ref.byte_length}};
}

AssetRef asset_ref_from_json(const json& j) {
  AssetRef r;
  r.asset_id = required<std::string>(j, "asset_id");
  auto mt = parse_media_type(required<std::string>(j, "media_type"));
  if (!mt) throw Error(ErrorCode::kInvalidArgument, "unknown media_type");
  r.media_type = *mt;
  r.byte_length = required<std::uint64_t>(j, "byte_length");
  return r;
}

json to_json(const CaptureMeta& m) {
  json j = {{"azimuth_deg", m.azimuth_deg},
            {"source", capture_source_name(m.source)},
            {"width_px", m.width_px},
            {"height_px", m.height_px}};
  j["captured_at"] = m.captured_at ? json(*m.captured_at) : json(nullptr);
  return j;
}

CaptureMeta capture_meta_from_json(const json& j) {
  CaptureMeta m;
  m.azimuth_deg = required<double>(j, "azimuth_deg");
  auto src = parse_capture_source(optional_or<std::string>(j, "source", "local_file"));
  if (!src) throw Error(ErrorCode::kInvalidArgument, "unknown capture source");
  m.source = *src;
  if (j.contains("captured_at") && j["captured_at"].is_string()) m.captured_at = j["captured_at"].get<std::string>();
  m.width_px = optional_or<std::uint32_t>(j, "width_px", 0);
  m.height_px = optional_or<std::uint32_t>(j, "height_px", 0);
  return m;
}

json to_json(const SiteRecord& s) {
  json images = json::array();
  for (const auto& img : s.images) {
    images.push_back({{"asset", to_json(img.asset)}, {"capture", to_json(img.capture)}});
  }
  json j = {{"site_id", s.site_id},
            {"name", s.name},
            {"site_type", s.site_type},
            {"material", s.material},
            {"features", s.features},
            {"location", s.location},
            {"scale_elements", s.scale_elements},
            {"illumination", s.illumination},
            {"images", images}};
  j["baseline_hours"] =
      s.baseline ? json{{"low", s.baseline->low}, {"high", s.baseline->high}} : json(nullptr);
  return j;
}

SiteRecord site_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "site must be a JSON object");
  SiteRecord s;
  s.site_id = optional_or<std::string>(j, "site_id", "");
  s.name = optional_or<std::string>(j, "name", "");
  s.site_type = optional_or<std::string>(j, "site_type", "");
  s.material = optional_or<std::string>(j, "material", "");
  s.features = optional_or<std::vector<std::string>>(j, "features", {});
  s.location = optional_or<std::string>(j, "location", "");
  s.scale_elements = optional_or<std::vector<std::string>>(j, "scale_elements", {});
  s.illumination = optional_or<std::string>(j, "illumination", "");
  if (j.contains("baseline_hours") && j["baseline_hours"].is_object()) {
    s.baseline = BaselineHours{required<double>(j["baseline_hours"], "low"),
                               required<double>(j["baseline_hours"], "high")};
  }
  if (j.contains("images")) {
    for (const auto& img : j["images"]) {
      s.images.push_back({asset_ref_from_json(img.at("asset")), capture_meta_from_json(img.at("capture"))});
    }
  }
  return s;
}

json to_json(const ReadinessReport& r) {
  return {{"has_images", r.has_images},
          {"coverage_deg", r.coverage_deg},
          {"coverage_ok", r.coverage_ok},
          {"issues", r.issues}};
}

json to_json(const AttributeSet& a) {
  return {{"site_name", a.site_name},
          {"structural_type", a.structural_type},
          {"primary_material", a.primary_material},
          {"scale_elements", a.scale_elements},
          {"decorative_features", a.decorative_features},
          {"illumination", a.illumination}};
}

json to_json(const PromptText& p) {
  return {{"text", p.text}, {"template_id", p.template_id}, {"attr_digest", p.attr_digest}};
}

PromptText prompt_text_from_json(const json& j) {
  return {required<std::string>(j, "text"), required<std::string>(j, "template_id"),
          required<std::string>(j, "attr_digest")};
}

json to_json(const StageTiming& t) {
  return {{"stage", stage_name(t.stage)},
          {"elapsed_s", t.elapsed_s},
          {"started_at", t.started_at},
          {"succeeded", t.succeeded}};
}

StageTiming stage_timing_from_json(const json& j) {
  StageTiming t;
  auto st = parse_stage(required<std::string>(j, "stage"));
  if (!st) throw Error(ErrorCode::kInvalidArgument, "unknown stage");
  t.stage = *st;
  t.elapsed_s = required<double>(j, "elapsed_s");
  t.started_at = optional_or<std::string>(j, "started_at", "");
  t.succeeded = optional_or<bool>(j, "succeeded", true);
  return t;
}

json to_json(const JobConfig& c) {
  return {{"template_id", c.template_id},
          {"image_profile", c.image_profile},
          {"mesh_profile", c.mesh_profile},
          {"auto_decimate", c.auto_decimate}};
}

JobConfig job_config_from_json(const json& j) {
  JobConfig c;
  c.template_id = optional_or<std::string>(j, "template_id", c.template_id);
  c.image_profile = optional_or<std::string>(j, "image_profile", c.image_profile);
  c.mesh_profile = optional_or<std::string>(j, "mesh_profile", c.mesh_profile);
  c.auto_decimate = optional_or<bool>(j, "auto_decimate", false);
  return c;
}

json to_json(const GenerationJob& job) {
  auto opt = [](const auto& v, auto&& conv) { return v ? conv(*v) : json(nullptr); };
  json timings = json::array();
  for (const auto& t : job.timings) timings.push_back(to_json(t));
  return {
      {"job_id", job.job_id},
      {"site_id", job.site_id},
      {"config", to_json(job.config)},
      {"stage", stage_name(job.stage)},
      {"failed_stage", opt(job.failed_stage, [](Stage s) { return json(stage_name(s)); })},
      {"acquired_images", job.acquired_images},
      {"coverage_deg", opt(job.coverage_deg, [](double d) { return json(d); })},
      {"prompt", opt(job.prompt, [](const PromptText& p) { return to_json(p); })},
      {"iso_image", opt(job.iso_image, [](const AssetRef& r) { return to_json(r); })},
      {"mesh", opt(job.mesh, [](const AssetRef& r) { return to_json(r); })},
      {"triangle_count", opt(job.triangle_count, [](std::size_t n) { return json(n); })},
      {"published_dir", opt(job.published_dir, [](const std::string& s) { return json(s); })},
      {"timings", timings},
      {"total_elapsed_s", job.total_elapsed_s()},
      {"error", opt(job.error, [](const std::string& s) { return json(s); })},
      {"log", job.log},
      {"created_at", job.created_at},
      {"updated_at", job.updated_at},
  };
}

GenerationJob job_from_json(const json& j) {
  GenerationJob job;
  job.job_id = required<std::string>(j, "job_id");
  job.site_id = required<std::string>(j, "site_id");
  if (j.contains("config")) job.config = job_config_from_json(j["config"]);
  auto st = parse_stage(required<std::string>(j, "stage"));
  if (!st) throw Error(ErrorCode::kInvalidArgument, "unknown stage");
  job.stage = *st;
  if (j.contains("failed_stage") && j["failed_stage"].is_string()) {
    job.failed_stage = parse_stage(j["failed_stage"].get<std::string>());
  }
  job.acquired_images = optional_or<std::vector<std::string>>(j, "acquired_images", {});
  if (j.contains("coverage_deg") && j["coverage_deg"].is_number()) job.coverage_deg = j["coverage_deg"].get<double>();
  if (j.contains("prompt") && j["prompt"].is_object()) job.prompt = prompt_text_from_json(j["prompt"]);
  if (j.contains("iso_image") && j["iso_image"].is_object()) job.iso_image = asset_ref_from_json(j["iso_image"]);
  if (j.contains("mesh") && j["mesh"].is_object()) job.mesh = asset_ref_from_json(j["mesh"]);
  if (j.contains("triangle_count") && j["triangle_count"].is_number()) {
    job.triangle_count = j["triangle_count"].get<std::size_t>();
  }
  if (j.contains("published_dir") && j["published_dir"].is_string()) {
    job.published_dir = j["published_dir"].get<std::string>();
  }
  if (j.contains("timings")) {
    for (const auto& t : j["timings"]) job.timings.push_back(stage_timing_from_json(t));
  }
  if (j.contains("error") && j["error"].is_string()) job.error = j["error"].get<std::string>();
  job.log = optional_or<std::vector<std::string>>(j, "log", {});
  job.created_at = optional_or<std::string>(j, "created_at", "");
  job.updated_at = optional_or<std::string>(j, "updated_at", "");
  return job;
}

json to_json(const ValidationReport& r) {
  auto issues = [](const std::vector<Issue>& v) {
    json a = json::array();
    for (const auto& i : v) a.push_back({{"code", i.code}, {"message", i.message}});
    return a;
  };
  json j = {{"errors", issues(r.errors)},
            {"warnings", issues(r.warnings)},
            {"triangle_count", r.triangle_count},
            {"budget_ok", r.budget_ok},
            {"watertight", r.watertight}};
  j["bbox"] = r.bbox ? json{{"min", r.bbox->min}, {"max", r.bbox->max}} : json(nullptr);
  return j;
}

}  // namespace h3d
