#include <benchmark/benchmark.h>

#include "h3d/workspace.hpp"
#include "support.hpp"

using namespace h3d;

namespace {

// One mock job end to end, including journal writes and publishing.
void BM_MockJob(benchmark::State& state) {
  h3d::testing::TempDir dir;
  SimulatedClock clock;
  Workspace ws(dir.path(), clock);
  auto site = ws.catalog().register_site(h3d::testing::choto_sona());
  ws.catalog().ingest_image(site, h3d::testing::small_png(64, 48), CaptureMeta{});
  JobConfig config;
  if (state.range(0) == 0) {
    auto small = BackendProfile::mock_mesh_profile("small-mesh");
    small.mock_mesh.subdivisions = 2;
    small.mock_mesh.body_grid = {4, 4, 4};
    ws.gateway().add_profile(small);
    config.mesh_profile = "small-mesh";
  }
  for (auto _ : state) {
    auto id = ws.orchestrator().submit_job(site, config);
    benchmark::DoNotOptimize(ws.orchestrator().run_to_completion(id));
  }
}
BENCHMARK(BM_MockJob)->Arg(0)->Arg(1)->ArgNames({"full_mesh"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
