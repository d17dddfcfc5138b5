#include <benchmark/benchmark.h>

#include "h3d/prompt.hpp"
#include "support.hpp"

using namespace h3d;

namespace {

void BM_ParseDefaultTemplate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse_template(default_template_source(), "default"));
}
BENCHMARK(BM_ParseDefaultTemplate);

void BM_CompileDefault(benchmark::State& state) {
  auto tmpl = default_template();
  auto attrs = attributes_of(h3d::testing::choto_sona());
  for (auto _ : state) benchmark::DoNotOptimize(compile_prompt(tmpl, attrs));
}
BENCHMARK(BM_CompileDefault);

void BM_LintAttributes(benchmark::State& state) {
  auto tmpl = default_template();
  auto attrs = attributes_of(h3d::testing::choto_sona());
  for (auto _ : state) benchmark::DoNotOptimize(lint_attributes(attrs, tmpl));
}
BENCHMARK(BM_LintAttributes);

}  // namespace

BENCHMARK_MAIN();
