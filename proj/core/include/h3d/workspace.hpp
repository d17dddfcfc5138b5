#pragma once

#include <filesystem>
#include <memory>

#include "h3d/asset_store.hpp"
#include "h3d/catalog.hpp"
#include "h3d/clock.hpp"
#include "h3d/gateway.hpp"
#include "h3d/orchestrator.hpp"
#include "h3d/prompt.hpp"

namespace h3d {

// Everything rooted at one data directory, wired together:
//   <data>/assets, <data>/catalog, <data>/templates, <data>/jobs, <data>/published
class Workspace {
 public:
  // Registers the built-in mock profiles, then any profiles from
  // `backends_file` (which may override them).
  Workspace(std::filesystem::path data_dir, Clock& clock,
            const std::filesystem::path& backends_file = {});

  const std::filesystem::path& data_dir() const { return data_dir_; }
  AssetStore& assets() { return *assets_; }
  Catalog& catalog() { return *catalog_; }
  TemplateLibrary& templates() { return *templates_; }
  BackendGateway& gateway() { return *gateway_; }
  Orchestrator& orchestrator() { return *orchestrator_; }
  Clock& clock() { return clock_; }

 private:
  std::filesystem::path data_dir_;
  Clock& clock_;
  std::unique_ptr<AssetStore> assets_;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<TemplateLibrary> templates_;
  std::unique_ptr<BackendGateway> gateway_;
  std::unique_ptr<Orchestrator> orchestrator_;
};

}  // namespace h3d
