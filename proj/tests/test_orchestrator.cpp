#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "h3d/bytes.hpp"
#include "h3d/mesh.hpp"
#include "h3d/workspace.hpp"
#include "support.hpp"

using namespace h3d;
using h3d::testing::TempDir;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInternal;
}

// Mesh generation that always fails with a transient fault.
struct DownMesh : MeshBackend {
  BackendResponse generate(const AssetRef&, const Bytes&) override {
    throw BackendError(ErrorCode::kBackendTimeout, "mesh service timed out", true);
  }
};

struct Env {
  TempDir dir;
  SimulatedClock clock;
  Workspace ws{dir.path(), clock};
  std::string site;

  Env() {
    // A small dome keeps mesh work cheap; counts are checked in the gateway tests.
    auto mesh = BackendProfile::mock_mesh_profile("small-mesh");
    mesh.mock_mesh.subdivisions = 2;
    mesh.mock_mesh.body_grid = {3, 3, 4};
    ws.gateway().add_profile(mesh);
    site = ws.catalog().register_site(h3d::testing::choto_sona());
    ingest(0);
  }

  void ingest(double azimuth, std::uint8_t shade = 90) {
    CaptureMeta meta;
    meta.azimuth_deg = azimuth;
    ws.catalog().ingest_image(site, h3d::testing::small_png(16, 12, shade), meta);
  }

  JobConfig config(std::string mesh = "small-mesh") const {
    JobConfig c;
    c.mesh_profile = std::move(mesh);
    return c;
  }

  Orchestrator& orch() { return ws.orchestrator(); }
};

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::kAcquire, Stage::kPrompt, Stage::kSynthesize2D, Stage::kGenerate3D, Stage::kPublish,
                  Stage::kDone, Stage::kFailed}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_FALSE(parse_stage("Render"));
  EXPECT_EQ(next_stage(Stage::kPublish), Stage::kDone);
  EXPECT_TRUE(is_terminal(Stage::kDone));
  EXPECT_TRUE(is_terminal(Stage::kFailed));
  EXPECT_FALSE(is_terminal(Stage::kGenerate3D));
}

TEST(Submit, ReadySiteStartsAtAcquire) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  auto job = env.orch().job_status(id);
  EXPECT_EQ(job.stage, Stage::kAcquire);
  EXPECT_TRUE(job.timings.empty());
  EXPECT_EQ(job.site_id, env.site);
  // One image only: the coverage warning lands in the log.
  ASSERT_FALSE(job.log.empty());
  EXPECT_NE(job.log.front().find("readiness:"), std::string::npos);
}

TEST(Submit, Errors) {
  Env env;
  EXPECT_EQ(code_of([&] { env.orch().submit_job("no-such-site", env.config()); }), ErrorCode::kSiteNotFound);
  auto bare = h3d::testing::choto_sona();
  bare.name = "Bare Site";
  auto empty_site = env.ws.catalog().register_site(bare);
  EXPECT_EQ(code_of([&] { env.orch().submit_job(empty_site, env.config()); }), ErrorCode::kSiteHasNoImages);
  auto c = env.config();
  c.template_id = "missing";
  EXPECT_EQ(code_of([&] { env.orch().submit_job(env.site, c); }), ErrorCode::kTemplateNotFound);
  c = env.config();
  c.image_profile = "small-mesh";
  EXPECT_EQ(code_of([&] { env.orch().submit_job(env.site, c); }), ErrorCode::kInvalidProfile);
  c = env.config("nope");
  EXPECT_EQ(code_of([&] { env.orch().submit_job(env.site, c); }), ErrorCode::kProfileNotFound);
}

TEST(Submit, JobsAreNotDeduplicated) {
  Env env;
  auto a = env.orch().submit_job(env.site, env.config());
  auto b = env.orch().submit_job(env.site, env.config());
  EXPECT_NE(a, b);
  EXPECT_EQ(env.orch().jobs().size(), 2u);
  env.orch().run_to_completion(a);
  EXPECT_EQ(env.orch().job_status(b).stage, Stage::kAcquire);
}

TEST(Advance, OneStagePerCall) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  auto job = env.orch().advance(id);
  EXPECT_EQ(job.stage, Stage::kPrompt);
  ASSERT_EQ(job.timings.size(), 1u);
  EXPECT_EQ(job.timings[0].stage, Stage::kAcquire);
  EXPECT_EQ(job.acquired_images.size(), 1u);
  EXPECT_FALSE(job.prompt);

  job = env.orch().advance(id);
  EXPECT_EQ(job.stage, Stage::kSynthesize2D);
  ASSERT_TRUE(job.prompt);
  EXPECT_NE(job.prompt->text.find("Choto Sona Mosque"), std::string::npos);
  EXPECT_FALSE(job.iso_image);

  job = env.orch().advance(id);
  EXPECT_EQ(job.stage, Stage::kGenerate3D);
  EXPECT_TRUE(job.iso_image);
  EXPECT_FALSE(job.mesh);

  job = env.orch().advance(id);
  EXPECT_EQ(job.stage, Stage::kPublish);
  EXPECT_TRUE(job.mesh);

  job = env.orch().advance(id);
  EXPECT_EQ(job.stage, Stage::kDone);
  EXPECT_EQ(code_of([&] { env.orch().advance(id); }), ErrorCode::kJobTerminal);
  EXPECT_EQ(code_of([&] { env.orch().advance("job-0000000000000000"); }), ErrorCode::kJobNotFound);
  EXPECT_EQ(code_of([&] { env.orch().job_status("job-0000000000000000"); }), ErrorCode::kJobNotFound);
}

TEST(RunToCompletion, DoneHasFiveOrderedTimings) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  auto job = env.orch().run_to_completion(id);
  ASSERT_EQ(job.stage, Stage::kDone);
  ASSERT_EQ(job.timings.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(job.timings[i].stage, kPipelineStages[i]);
    EXPECT_TRUE(job.timings[i].succeeded);
    EXPECT_GE(job.timings[i].elapsed_s, 0.0);
  }
  double sum = 0;
  for (const auto& t : job.timings) sum += t.elapsed_s;
  EXPECT_DOUBLE_EQ(job.total_elapsed_s(), sum);
}

TEST(RunToCompletion, ConfiguredDelaysReproduceAhsanManzilRow) {
  Env env;
  auto img = BackendProfile::mock_image("slow-image");
  img.mock_delay_s = 10.2;
  env.ws.gateway().add_profile(img);
  auto mesh = BackendProfile::mock_mesh_profile("slow-mesh");
  mesh.mock_delay_s = 34;
  mesh.mock_mesh.subdivisions = 1;
  mesh.mock_mesh.body_grid = {2, 2, 2};
  env.ws.gateway().add_profile(mesh);
  JobConfig c;
  c.image_profile = "slow-image";
  c.mesh_profile = "slow-mesh";
  auto job = env.orch().run_to_completion(env.orch().submit_job(env.site, c));
  ASSERT_EQ(job.stage, Stage::kDone);
  EXPECT_NEAR(*job.elapsed_of(Stage::kSynthesize2D), 10.2, 1e-9);
  EXPECT_NEAR(*job.elapsed_of(Stage::kGenerate3D), 34.0, 1e-9);
  EXPECT_NEAR(*job.elapsed_of(Stage::kSynthesize2D) + *job.elapsed_of(Stage::kGenerate3D), 44.2, 1e-9);
  // The other stages do no simulated waiting.
  EXPECT_NEAR(job.total_elapsed_s(), 44.2, 1e-9);
}

TEST(Failure, MeshBackendDownLeavesFourTimings) {
  Env env;
  env.ws.gateway().set_mesh_backend("small-mesh", std::make_shared<DownMesh>());
  auto id = env.orch().submit_job(env.site, env.config());
  auto job = env.orch().run_to_completion(id);
  EXPECT_EQ(job.stage, Stage::kFailed);
  EXPECT_EQ(job.failed_stage, Stage::kGenerate3D);
  ASSERT_EQ(job.timings.size(), 4u);
  EXPECT_FALSE(job.timings[3].succeeded);
  EXPECT_EQ(job.timings[3].stage, Stage::kGenerate3D);
  ASSERT_TRUE(job.error);
  EXPECT_NE(job.error->find("backend_unreachable"), std::string::npos);
  EXPECT_TRUE(job.iso_image);
  EXPECT_FALSE(job.mesh);
  EXPECT_EQ(code_of([&] { env.orch().advance(id); }), ErrorCode::kJobTerminal);
}

TEST(Failure, SynthesisFailurePreservesPriorTimings) {
  struct Down : ImageBackend {
    BackendResponse synthesize(const std::string&, const std::vector<AssetRef>&, const std::vector<Bytes>&) override {
      throw BackendError(ErrorCode::kBackendUnreachable, "connection refused", true);
    }
  };
  Env env;
  env.ws.gateway().set_image_backend("mock-image", std::make_shared<Down>());
  auto job = env.orch().run_to_completion(env.orch().submit_job(env.site, env.config()));
  EXPECT_EQ(job.stage, Stage::kFailed);
  EXPECT_EQ(job.failed_stage, Stage::kSynthesize2D);
  ASSERT_EQ(job.timings.size(), 3u);
  EXPECT_TRUE(job.timings[0].succeeded);
  EXPECT_TRUE(job.timings[1].succeeded);
  EXPECT_TRUE(job.prompt);
}

TEST(Failure, RetryResumesFromFailedStage) {
  Env env;
  env.ws.gateway().set_mesh_backend("small-mesh", std::make_shared<DownMesh>());
  auto id = env.orch().submit_job(env.site, env.config());
  auto failed = env.orch().run_to_completion(id);
  ASSERT_EQ(failed.stage, Stage::kFailed);
  auto iso = failed.iso_image;

  // Restore the mock adapter; a profile re-add rebuilds it.
  auto mesh = env.ws.gateway().profile("small-mesh");
  env.ws.gateway().add_profile(mesh);
  auto job = env.orch().run_to_completion(id, true);
  ASSERT_EQ(job.stage, Stage::kDone);
  ASSERT_EQ(job.timings.size(), 5u);
  for (const auto& t : job.timings) EXPECT_TRUE(t.succeeded);
  EXPECT_EQ(job.iso_image, iso);
  EXPECT_FALSE(job.error);
}

TEST(Publish, WritesModelsAndManifest) {
  Env env;
  auto job = env.orch().run_to_completion(env.orch().submit_job(env.site, env.config()));
  ASSERT_EQ(job.stage, Stage::kDone);
  ASSERT_TRUE(job.published_dir);
  auto dir = env.ws.data_dir() / *job.published_dir;
  EXPECT_EQ(dir, env.orch().published_dir(job));
  for (const char* f : {"model.gltf", "model.glb", "model.obj", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  auto manifest = json::parse(to_string(read_file(dir / "manifest.json")));
  EXPECT_EQ(manifest["job_id"], job.job_id);
  EXPECT_EQ(manifest["site_id"], env.site);
  EXPECT_EQ(manifest["prompt_digest"], job.prompt->attr_digest);
  EXPECT_EQ(manifest["assets"]["mesh"]["asset_id"], job.mesh->asset_id);
  EXPECT_EQ(manifest["triangle_count"].get<std::size_t>(), *job.triangle_count);
  EXPECT_EQ(manifest["timings"].size(), 4u);

  auto gltf_id = manifest["assets"]["model.gltf"]["asset_id"].get<std::string>();
  EXPECT_EQ(env.ws.assets().get(gltf_id), read_file(dir / "model.gltf"));
  auto doc = parse_gltf(read_file(dir / "model.glb"));
  EXPECT_EQ(triangle_count(doc), *job.triangle_count);
  auto obj = parse_obj(to_string(read_file(dir / "model.obj")));
  EXPECT_EQ(obj.faces.size(), *job.triangle_count);
}

TEST(Publish, AutoDecimateBringsMeshUnderTarget) {
  SimulatedClock clock;
  CaptureMeta meta;
  // The default mock mesh has 60,000 triangles; the target sits below that.
  TempDir dir2;
  AssetStore assets(dir2.path());
  Catalog catalog(dir2.path(), assets);
  TemplateLibrary templates(dir2.path() / "templates");
  BackendGateway gw(assets, clock);
  gw.add_profile(BackendProfile::mock_image());
  gw.add_profile(BackendProfile::mock_mesh_profile());
  Orchestrator orch({dir2.path(), 10'000}, assets, catalog, templates, gw, clock);
  auto site2 = catalog.register_site(h3d::testing::choto_sona());
  catalog.ingest_image(site2, h3d::testing::small_png(), meta);

  JobConfig plain;
  auto untouched = orch.run_to_completion(orch.submit_job(site2, plain));
  ASSERT_EQ(untouched.stage, Stage::kDone);
  EXPECT_EQ(*untouched.triangle_count, 60'000u);

  JobConfig dec;
  dec.auto_decimate = true;
  auto job = orch.run_to_completion(orch.submit_job(site2, dec));
  ASSERT_EQ(job.stage, Stage::kDone);
  EXPECT_LE(*job.triangle_count, 10'000u);
  EXPECT_GT(*job.triangle_count, 0u);
  auto doc = parse_gltf(assets.get(job.mesh->asset_id));
  EXPECT_EQ(triangle_count(doc), *job.triangle_count);
  // The undecimated original is still stored.
  EXPECT_TRUE(assets.contains(untouched.mesh->asset_id));
}

TEST(Journal, ReopenRestoresEveryJob) {
  Env env;
  auto a = env.orch().submit_job(env.site, env.config());
  env.orch().advance(a);
  env.orch().advance(a);
  auto b = env.orch().submit_job(env.site, env.config());
  auto done = env.orch().run_to_completion(b);

  JobStore reopened(env.ws.data_dir());
  auto ja = reopened.find(a);
  ASSERT_TRUE(ja);
  EXPECT_EQ(*ja, env.orch().job_status(a));
  EXPECT_EQ(ja->stage, Stage::kSynthesize2D);
  EXPECT_EQ(*reopened.find(b), done);
  auto snapshot = json::parse(to_string(read_file(reopened.snapshot_path(a))));
  EXPECT_EQ(snapshot["stage"], "Synthesize2D");
}

TEST(Journal, TornTailAndDuplicatesReplayOnce) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  env.orch().advance(id);
  auto at_synth = env.orch().advance(id);
  auto journal = env.orch().store().journal_path(id);
  auto lines = read_lines(journal);
  ASSERT_EQ(lines.size(), 3u);

  // Replay the Prompt completion again and leave half a record at the end.
  {
    std::ofstream out(journal, std::ios::app | std::ios::binary);
    out << lines[2] << "\n" << lines[1] << "\n" << lines[2].substr(0, lines[2].size() / 2);
  }
  auto job = JobStore::replay(journal);
  EXPECT_EQ(job, at_synth);
  ASSERT_EQ(job.timings.size(), 2u);

  // The store built on top resumes without duplicating stages.
  TempDir fresh;
  SimulatedClock clock;
  {
    std::filesystem::copy(env.ws.data_dir(), fresh.path(), std::filesystem::copy_options::recursive);
  }
  Workspace ws(fresh.path(), clock);
  ws.gateway().add_profile(env.ws.gateway().profile("small-mesh"));
  auto done = ws.orchestrator().run_to_completion(id);
  ASSERT_EQ(done.stage, Stage::kDone);
  ASSERT_EQ(done.timings.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(done.timings[i].stage, kPipelineStages[i]);
  // The torn tail was dropped on load, so records appended afterwards replay too.
  EXPECT_EQ(JobStore::replay(ws.orchestrator().store().journal_path(id)), done);
}

TEST(Journal, GarbageLinesAreSkipped) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  env.orch().advance(id);
  auto journal = env.orch().store().journal_path(id);
  {
    std::ofstream out(journal, std::ios::app | std::ios::binary);
    out << "{not json}\n"
        << json{{"event", "stage_completed"}, {"stage", "Publish"}}.dump() << "\n"
        << json{{"event", "mystery"}}.dump() << "\n";
  }
  auto job = JobStore::replay(journal);
  EXPECT_EQ(job.stage, Stage::kPrompt);
  EXPECT_EQ(job.timings.size(), 1u);
}

TEST(Journal, ApplyIsIdempotentPerStage) {
  GenerationJob job;
  job.stage = Stage::kAcquire;
  json done = {{"event", "stage_completed"},
               {"stage", "Acquire"},
               {"timing", {{"stage", "Acquire"}, {"elapsed_s", 0.5}, {"started_at", "t"}, {"succeeded", true}}},
               {"artifacts", {{"acquired_images", {"a"}}}}};
  JobStore::apply(job, done);
  JobStore::apply(job, done);
  EXPECT_EQ(job.stage, Stage::kPrompt);
  EXPECT_EQ(job.timings.size(), 1u);
  JobStore::apply(job, {{"event", "retry"}});
  EXPECT_EQ(job.stage, Stage::kPrompt);
}

TEST(Concurrency, IndependentJobsAdvanceInParallel) {
  Env env;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(env.orch().submit_job(env.site, env.config()));
  std::vector<std::thread> threads;
  for (const auto& id : ids) {
    threads.emplace_back([&env, id] { env.orch().run_to_completion(id); });
  }
  for (auto& t : threads) t.join();
  for (const auto& id : ids) {
    auto job = env.orch().job_status(id);
    EXPECT_EQ(job.stage, Stage::kDone);
    EXPECT_EQ(job.timings.size(), 5u);
  }
}

TEST(Concurrency, SameJobIsNeverAdvancedTwiceAtOnce) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  std::atomic<int> ok{0}, terminal{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      try {
        env.orch().advance(id);
        ++ok;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kJobTerminal) ++terminal;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 5);
  EXPECT_EQ(terminal.load(), 3);
  auto job = env.orch().job_status(id);
  EXPECT_EQ(job.stage, Stage::kDone);
  EXPECT_EQ(job.timings.size(), 5u);
}

TEST(Artifacts, AdvancingNeverRemovesStoredAssets) {
  Env env;
  auto id = env.orch().submit_job(env.site, env.config());
  std::size_t before = env.ws.assets().size();
  std::vector<std::string> seen;
  GenerationJob job = env.orch().job_status(id);
  while (!is_terminal(job.stage)) {
    job = env.orch().advance(id);
    if (job.iso_image) seen.push_back(job.iso_image->asset_id);
    if (job.mesh) seen.push_back(job.mesh->asset_id);
    auto now = env.ws.assets().size();
    EXPECT_GE(now, before);
    before = now;
    for (const auto& a : seen) EXPECT_TRUE(env.ws.assets().contains(a));
  }
}
