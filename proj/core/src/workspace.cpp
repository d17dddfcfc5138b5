#include "h3d/workspace.hpp"

#include "h3d/bytes.hpp"

namespace h3d {

Workspace::Workspace(std::filesystem::path data_dir, Clock& clock, const std::filesystem::path& backends_file)
    : data_dir_(std::move(data_dir)), clock_(clock) {
  std::filesystem::create_directories(data_dir_);
  assets_ = std::make_unique<AssetStore>(data_dir_);
  catalog_ = std::make_unique<Catalog>(data_dir_, *assets_);
  templates_ = std::make_unique<TemplateLibrary>(data_dir_ / "templates");
  gateway_ = std::make_unique<BackendGateway>(*assets_, clock_);
  gateway_->add_profile(BackendProfile::mock_image());
  gateway_->add_profile(BackendProfile::mock_mesh_profile());
  if (!backends_file.empty()) {
    for (auto& [_, profile] : parse_profiles(to_string(read_file(backends_file)))) {
      gateway_->add_profile(std::move(profile));
    }
  }
  orchestrator_ = std::make_unique<Orchestrator>(OrchestratorOptions{data_dir_}, *assets_, *catalog_, *templates_,
                                                 *gateway_, clock_);
}

}  // namespace h3d
