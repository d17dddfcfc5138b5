#include <benchmark/benchmark.h>

#include "h3d/gateway.hpp"
#include "h3d/mesh.hpp"

using namespace h3d;

namespace {

const MeshDocument& mock_doc() {
  static const MeshDocument doc = build_mock_mesh("sandstone", MockMeshParams{});
  return doc;
}

void BM_WriteGlb(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(write_gltf(mock_doc(), Container::kGlb));
}
BENCHMARK(BM_WriteGlb)->Unit(benchmark::kMillisecond);

void BM_ParseGlb(benchmark::State& state) {
  auto bytes = write_gltf(mock_doc(), Container::kGlb);
  for (auto _ : state) benchmark::DoNotOptimize(parse_gltf(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseGlb)->Unit(benchmark::kMillisecond);

void BM_ParseJsonGltf(benchmark::State& state) {
  auto bytes = write_gltf(mock_doc(), Container::kJson);
  for (auto _ : state) benchmark::DoNotOptimize(parse_gltf(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseJsonGltf)->Unit(benchmark::kMillisecond);

void BM_Validate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(validate(mock_doc()));
}
BENCHMARK(BM_Validate)->Unit(benchmark::kMillisecond);

void BM_Watertight(benchmark::State& state) {
  auto doc = single_mesh_document(icosphere(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(is_watertight(doc));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * triangle_count(doc)));
}
BENCHMARK(BM_Watertight)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

void BM_Decimate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(decimate(mock_doc(), static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_Decimate)->Arg(50'000)->Arg(5'000)->Unit(benchmark::kMillisecond);

void BM_ExportObj(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(export_obj(mock_doc()));
}
BENCHMARK(BM_ExportObj)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
