#include "h3d/job.hpp"

namespace h3d {

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::kAcquire: return "Acquire";
    case Stage::kPrompt: return "Prompt";
    case Stage::kSynthesize2D: return "Synthesize2D";
    case Stage::kGenerate3D: return "Generate3D";
    case Stage::kPublish: return "Publish";
    case Stage::kDone: return "Done";
    case Stage::kFailed: return "Failed";
  }
  return "Failed";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (auto s : {Stage::kAcquire, Stage::kPrompt, Stage::kSynthesize2D, Stage::kGenerate3D, Stage::kPublish,
                 Stage::kDone, Stage::kFailed}) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

bool is_terminal(Stage s) noexcept { return s == Stage::kDone || s == Stage::kFailed; }

Stage next_stage(Stage s) noexcept {
  switch (s) {
    case Stage::kAcquire: return Stage::kPrompt;
    case Stage::kPrompt: return Stage::kSynthesize2D;
    case Stage::kSynthesize2D: return Stage::kGenerate3D;
    case Stage::kGenerate3D: return Stage::kPublish;
    case Stage::kPublish: return Stage::kDone;
    default: return s;
  }
}

double GenerationJob::total_elapsed_s() const {
  double total = 0;
  for (const auto& t : timings) total += t.elapsed_s;
  return total;
}

std::optional<double> GenerationJob::elapsed_of(Stage s) const {
  for (const auto& t : timings) {
    if (t.stage == s && t.succeeded) return t.elapsed_s;
  }
  return std::nullopt;
}

}  // namespace h3d
