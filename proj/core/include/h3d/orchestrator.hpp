#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h3d/asset_store.hpp"
#include "h3d/catalog.hpp"
#include "h3d/clock.hpp"
#include "h3d/gateway.hpp"
#include "h3d/job.hpp"
#include "h3d/prompt.hpp"

namespace h3d {

// Persistent job records.
//
//   jobs/<job_id>/journal.ndjson   append-only event log, one JSON per line
//   jobs/<job_id>/snapshot.json    materialized state after the last event
//
// The journal is authoritative: on open each job is rebuilt by replaying its
// events, a torn trailing line is ignored, and a repeated stage completion is
// applied once.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path root);

  void create(const GenerationJob& job);
  // Appends `event` to the job's journal, applies it, and rewrites the
  // snapshot. Returns the updated job.
  GenerationJob append(const std::string& job_id, nlohmann::json event);

  std::optional<GenerationJob> find(const std::string& job_id) const;
  std::vector<GenerationJob> list() const;

  std::filesystem::path journal_path(const std::string& job_id) const;
  std::filesystem::path snapshot_path(const std::string& job_id) const;

  // Folds one journal event into a job. Exposed for replay tests.
  static void apply(GenerationJob& job, const nlohmann::json& event);
  static GenerationJob replay(const std::filesystem::path& journal);

 private:
  void load();

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, GenerationJob> jobs_;
};

// Published model index: published/<site_id>/<job_id>/{model.gltf, model.glb,
// model.obj, manifest.json}.
struct PublishedModel {
  std::filesystem::path dir;
  AssetRef gltf;
  AssetRef glb;
  AssetRef obj;
};

struct OrchestratorOptions {
  std::filesystem::path data_dir;
  std::size_t decimate_target = kTriangleBudgetMax;
};

// Drives jobs through Acquire -> Prompt -> Synthesize2D -> Generate3D ->
// Publish -> Done. A job is advanced by at most one caller at a time; other
// jobs advance in parallel.
class Orchestrator {
 public:
  Orchestrator(OrchestratorOptions options, AssetStore& assets, Catalog& catalog,
               TemplateLibrary& templates, BackendGateway& gateway, Clock& clock);

  std::string submit_job(const std::string& site_id, const JobConfig& config);
  GenerationJob advance(const std::string& job_id, bool retry = false);
  GenerationJob run_to_completion(const std::string& job_id, bool retry = false);
  GenerationJob job_status(const std::string& job_id) const;
  std::vector<GenerationJob> jobs() const;

  std::filesystem::path published_dir(const GenerationJob& job) const;

  JobStore& store() { return store_; }

 private:
  std::mutex& job_mutex(const std::string& job_id);
  nlohmann::json run_stage(const GenerationJob& job);

  nlohmann::json stage_acquire(const GenerationJob& job);
  nlohmann::json stage_prompt(const GenerationJob& job);
  nlohmann::json stage_synthesize(const GenerationJob& job);
  nlohmann::json stage_generate(const GenerationJob& job);
  nlohmann::json stage_publish(const GenerationJob& job);

  OrchestratorOptions options_;
  AssetStore& assets_;
  Catalog& catalog_;
  TemplateLibrary& templates_;
  BackendGateway& gateway_;
  Clock& clock_;
  JobStore store_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> job_locks_;
};

}  // namespace h3d
