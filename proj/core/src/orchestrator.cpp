#include "h3d/orchestrator.hpp"

#include <fstream>
#include <mutex>
#include <random>

#include "h3d/error.hpp"
#include "h3d/json_io.hpp"

namespace h3d {

using nlohmann::json;

// JobStore ---------------------------------------------------------------------

JobStore::JobStore(std::filesystem::path root) : root_(std::move(root) / "jobs") {
  std::filesystem::create_directories(root_);
  load();
}

std::filesystem::path JobStore::journal_path(const std::string& job_id) const {
  return root_ / job_id / "journal.ndjson";
}

std::filesystem::path JobStore::snapshot_path(const std::string& job_id) const {
  return root_ / job_id / "snapshot.json";
}

void JobStore::apply(GenerationJob& job, const json& event) {
  auto kind = event.value("event", std::string());
  auto at = event.value("at", std::string());
  if (kind == "submitted") {
    job = job_from_json(event.at("job"));
    return;
  }
  auto stage = parse_stage(event.value("stage", std::string()));
  if (kind == "stage_completed") {
    // Replayed or duplicated completions for a stage the job has already left
    // are ignored.
    if (!stage || *stage != job.stage) return;
    const auto& a = event.value("artifacts", json::object());
    if (a.contains("acquired_images")) job.acquired_images = a["acquired_images"].get<std::vector<std::string>>();
    if (a.contains("coverage_deg")) job.coverage_deg = a["coverage_deg"].get<double>();
    if (a.contains("prompt")) job.prompt = prompt_text_from_json(a["prompt"]);
    if (a.contains("iso_image")) job.iso_image = asset_ref_from_json(a["iso_image"]);
    if (a.contains("mesh")) job.mesh = asset_ref_from_json(a["mesh"]);
    if (a.contains("triangle_count")) job.triangle_count = a["triangle_count"].get<std::size_t>();
    if (a.contains("published_dir")) job.published_dir = a["published_dir"].get<std::string>();
    if (a.contains("log")) {
      for (const auto& line : a["log"]) job.log.push_back(line.get<std::string>());
    }
    job.timings.push_back(stage_timing_from_json(event.at("timing")));
    job.stage = next_stage(job.stage);
  } else if (kind == "stage_failed") {
    if (!stage || *stage != job.stage) return;
    auto timing = stage_timing_from_json(event.at("timing"));
    timing.succeeded = false;
    job.timings.push_back(timing);
    job.failed_stage = job.stage;
    job.stage = Stage::kFailed;
    job.error = event.value("error", std::string("unknown error"));
    job.log.push_back(std::string(stage_name(*stage)) + " failed: " + *job.error);
  } else if (kind == "retry") {
    if (job.stage != Stage::kFailed || !job.failed_stage) return;
    std::erase_if(job.timings, [](const StageTiming& t) { return !t.succeeded; });
    job.stage = *job.failed_stage;
    job.failed_stage.reset();
    job.error.reset();
    job.log.push_back("retrying from " + std::string(stage_name(job.stage)));
  } else {
    return;
  }
  if (!at.empty()) job.updated_at = at;
}

GenerationJob JobStore::replay(const std::filesystem::path& journal) {
  std::ifstream in(journal, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open journal " + journal.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  GenerationJob job;
  bool submitted = false;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string::npos) break;  // torn trailing write
    auto line = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error&) {
      continue;
    }
    if (event.value("event", std::string()) == "submitted") {
      if (submitted) continue;
      submitted = true;
    } else if (!submitted) {
      continue;
    }
    apply(job, event);
  }
  if (!submitted) throw Error(ErrorCode::kIo, "journal " + journal.string() + " has no submission record");
  return job;
}

void JobStore::load() {
  for (const auto& e : std::filesystem::directory_iterator(root_)) {
    if (!e.is_directory()) continue;
    auto journal = e.path() / "journal.ndjson";
    if (!std::filesystem::exists(journal)) continue;
    // Drop a torn trailing write so the next append starts on a fresh line.
    {
      std::ifstream in(journal, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (!content.empty() && content.back() != '\n') {
        auto keep = content.rfind('\n');
        std::filesystem::resize_file(journal, keep == std::string::npos ? 0 : keep + 1);
      }
    }
    GenerationJob job;
    try {
      job = replay(journal);
    } catch (const Error&) {
      continue;
    }
    write_file_atomic(e.path() / "snapshot.json", to_json(job).dump(2) + "\n");
    jobs_[job.job_id] = std::move(job);
  }
}

void JobStore::create(const GenerationJob& job) {
  json event = {{"event", "submitted"}, {"job", to_json(job)}, {"at", job.created_at}};
  std::unique_lock lock(mutex_);
  if (jobs_.count(job.job_id)) throw Error(ErrorCode::kInternal, "job id collision: " + job.job_id);
  append_line_durable(journal_path(job.job_id), event.dump());
  write_file_atomic(snapshot_path(job.job_id), to_json(job).dump(2) + "\n");
  jobs_[job.job_id] = job;
}

GenerationJob JobStore::append(const std::string& job_id, json event) {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::kJobNotFound, "job '" + job_id + "' not found");
  append_line_durable(journal_path(job_id), event.dump());
  GenerationJob next = it->second;
  apply(next, event);
  write_file_atomic(snapshot_path(job_id), to_json(next).dump(2) + "\n");
  it->second = next;
  return next;
}

std::optional<GenerationJob> JobStore::find(const std::string& job_id) const {
  std::shared_lock lock(mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<GenerationJob> JobStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<GenerationJob> out;
  for (const auto& [_, j] : jobs_) out.push_back(j);
  return out;
}

// Orchestrator -----------------------------------------------------------------

namespace {

std::string new_job_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id = "job-";
  auto v = rng();
  for (int i = 0; i < 16; ++i) id.push_back(kHex[(v >> (4 * i)) & 0xf]);
  return id;
}

}  // namespace

Orchestrator::Orchestrator(OrchestratorOptions options, AssetStore& assets, Catalog& catalog,
                           TemplateLibrary& templates, BackendGateway& gateway, Clock& clock)
    : options_(std::move(options)),
      assets_(assets),
      catalog_(catalog),
      templates_(templates),
      gateway_(gateway),
      clock_(clock),
      store_(options_.data_dir) {}

std::mutex& Orchestrator::job_mutex(const std::string& job_id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = job_locks_[job_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

std::string Orchestrator::submit_job(const std::string& site_id, const JobConfig& config) {
  auto site = catalog_.get(site_id);
  if (site.images.empty()) {
    throw Error(ErrorCode::kSiteHasNoImages, "site '" + site_id + "' has no ingested images");
  }
  if (gateway_.profile(config.image_profile).kind != BackendKind::kImageSynthesis) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + config.image_profile + "' is not an image_synthesis profile");
  }
  if (gateway_.profile(config.mesh_profile).kind != BackendKind::kMeshGeneration) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + config.mesh_profile + "' is not a mesh_generation profile");
  }
  if (!templates_.exists(config.template_id)) {
    throw Error(ErrorCode::kTemplateNotFound, "template '" + config.template_id + "' not found");
  }

  GenerationJob job;
  job.job_id = new_job_id();
  job.site_id = site_id;
  job.config = config;
  job.stage = Stage::kAcquire;
  job.created_at = format_utc(clock_.unix_millis());
  job.updated_at = job.created_at;
  auto readiness = readiness_of(site);
  for (const auto& issue : readiness.issues) job.log.push_back("readiness: " + issue);
  store_.create(job);
  return job.job_id;
}

GenerationJob Orchestrator::job_status(const std::string& job_id) const {
  auto job = store_.find(job_id);
  if (!job) throw Error(ErrorCode::kJobNotFound, "job '" + job_id + "' not found");
  return *job;
}

std::vector<GenerationJob> Orchestrator::jobs() const { return store_.list(); }

GenerationJob Orchestrator::advance(const std::string& job_id, bool retry) {
  std::lock_guard job_lock(job_mutex(job_id));
  auto job = job_status(job_id);
  if (job.stage == Stage::kFailed) {
    if (!retry) {
      throw Error(ErrorCode::kJobTerminal, "job '" + job_id + "' failed at " +
                                               std::string(stage_name(job.failed_stage.value_or(Stage::kFailed))) +
                                               "; advance with retry to resume");
    }
    job = store_.append(job_id, {{"event", "retry"}, {"at", format_utc(clock_.unix_millis())}});
  } else if (job.stage == Stage::kDone) {
    throw Error(ErrorCode::kJobTerminal, "job '" + job_id + "' is already done");
  }

  auto started_at = format_utc(clock_.unix_millis());
  auto start = clock_.monotonic();
  json event;
  try {
    auto artifacts = run_stage(job);
    event = {{"event", "stage_completed"}, {"artifacts", std::move(artifacts)}};
  } catch (const std::exception& e) {
    std::string message = e.what();
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
      message = std::string(code_name(err->code())) + ": " + message;
    }
    event = {{"event", "stage_failed"}, {"error", message}};
  }
  StageTiming timing{job.stage, clock_.seconds_since(start), started_at, event["event"] == "stage_completed"};
  event["stage"] = stage_name(job.stage);
  event["timing"] = to_json(timing);
  event["at"] = format_utc(clock_.unix_millis());
  return store_.append(job_id, std::move(event));
}

GenerationJob Orchestrator::run_to_completion(const std::string& job_id, bool retry) {
  auto job = job_status(job_id);
  if (job.stage == Stage::kFailed && retry) job = advance(job_id, true);
  while (!is_terminal(job.stage)) job = advance(job_id);
  return job;
}

std::filesystem::path Orchestrator::published_dir(const GenerationJob& job) const {
  return options_.data_dir / "published" / job.site_id / job.job_id;
}

json Orchestrator::run_stage(const GenerationJob& job) {
  switch (job.stage) {
    case Stage::kAcquire: return stage_acquire(job);
    case Stage::kPrompt: return stage_prompt(job);
    case Stage::kSynthesize2D: return stage_synthesize(job);
    case Stage::kGenerate3D: return stage_generate(job);
    case Stage::kPublish: return stage_publish(job);
    default: throw Error(ErrorCode::kJobTerminal, "job is terminal");
  }
}

json Orchestrator::stage_acquire(const GenerationJob& job) {
  auto site = catalog_.get(job.site_id);
  if (site.images.empty()) throw Error(ErrorCode::kSiteHasNoImages, "site has no ingested images");
  auto readiness = readiness_of(site);
  std::vector<std::string> ids;
  for (const auto& img : site.images) ids.push_back(img.asset.asset_id);
  json log = json::array();
  log.push_back("acquired " + std::to_string(ids.size()) + " image(s), azimuthal spread " +
                std::to_string(readiness.coverage_deg) + " deg");
  return {{"acquired_images", ids}, {"coverage_deg", readiness.coverage_deg}, {"log", log}};
}

json Orchestrator::stage_prompt(const GenerationJob& job) {
  auto site = catalog_.get(job.site_id);
  auto tmpl = templates_.load(job.config.template_id);
  auto attrs = attributes_of(site);
  auto prompt = compile_prompt(tmpl, attrs);
  json log = json::array();
  for (const auto& issue : lint_attributes(attrs, tmpl)) {
    log.push_back("prompt lint: " + std::string(lint_kind_name(issue.kind)) + " " + issue.field);
  }
  return {{"prompt", to_json(prompt)}, {"log", log}};
}

json Orchestrator::stage_synthesize(const GenerationJob& job) {
  if (!job.prompt) throw Error(ErrorCode::kInternal, "job has no compiled prompt");
  SynthesisRequest request;
  request.prompt = *job.prompt;
  for (const auto& id : job.acquired_images) request.reference_images.push_back(assets_.ref(id));
  auto result = gateway_.synthesize_isometric(request, job.config.image_profile);
  json log = json::array();
  log.push_back("isometric synthesized in " + std::to_string(result.elapsed_s) + " s after " +
                std::to_string(result.attempts) + " attempt(s)");
  return {{"iso_image", to_json(result.asset)}, {"log", log}};
}

json Orchestrator::stage_generate(const GenerationJob& job) {
  if (!job.iso_image) throw Error(ErrorCode::kInternal, "job has no isometric image");
  auto result = gateway_.generate_mesh(*job.iso_image, job.config.mesh_profile);
  auto mesh = result.asset;
  auto triangles = result.validation ? result.validation->triangle_count : 0;
  json log = json::array();
  log.push_back("mesh generated in " + std::to_string(result.elapsed_s) + " s with " + std::to_string(triangles) +
                " triangles");
  if (result.validation) {
    for (const auto& w : result.validation->warnings) log.push_back("mesh warning: " + w.code + ": " + w.message);
  }
  if (job.config.auto_decimate && triangles > options_.decimate_target) {
    auto doc = parse_gltf(assets_.get(mesh.asset_id));
    auto reduced = decimate(doc, options_.decimate_target);
    auto bytes = write_gltf(reduced, Container::kGlb);
    mesh = assets_.put(bytes, MediaType::kGlb);
    log.push_back("decimated " + std::to_string(triangles) + " -> " + std::to_string(triangle_count(reduced)) +
                  " triangles");
    triangles = triangle_count(reduced);
  }
  return {{"mesh", to_json(mesh)}, {"triangle_count", triangles}, {"log", log}};
}

json Orchestrator::stage_publish(const GenerationJob& job) {
  if (!job.mesh) throw Error(ErrorCode::kInternal, "job has no mesh");
  auto doc = parse_gltf(assets_.get(job.mesh->asset_id));
  auto gltf = write_gltf(doc, Container::kJson);
  auto glb = write_gltf(doc, Container::kGlb);
  auto obj = export_obj(doc);
  auto gltf_ref = assets_.put(gltf, MediaType::kGltfJson);
  auto glb_ref = assets_.put(glb, MediaType::kGlb);
  auto obj_ref = assets_.put(obj, MediaType::kObj);

  auto dir = published_dir(job);
  write_file_atomic(dir / "model.gltf", gltf);
  write_file_atomic(dir / "model.glb", glb);
  write_file_atomic(dir / "model.obj", obj);

  json timings = json::array();
  for (const auto& t : job.timings) timings.push_back(to_json(t));
  json manifest = {
      {"job_id", job.job_id},
      {"site_id", job.site_id},
      {"assets",
       {{"iso_image", job.iso_image ? to_json(*job.iso_image) : json(nullptr)},
        {"mesh", to_json(*job.mesh)},
        {"model.gltf", to_json(gltf_ref)},
        {"model.glb", to_json(glb_ref)},
        {"model.obj", to_json(obj_ref)}}},
      {"prompt_digest", job.prompt ? json(job.prompt->attr_digest) : json(nullptr)},
      {"prompt_template", job.config.template_id},
      {"triangle_count", triangle_count(doc)},
      {"timings", timings},
  };
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  auto rel = std::filesystem::relative(dir, options_.data_dir).generic_string();
  return {{"published_dir", rel}};
}

}  // namespace h3d
