#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "h3d/asset_store.hpp"

namespace h3d {

enum class CaptureSource { kStreetViewUrl, kLocalFile, kRemoteUrl };

std::string_view capture_source_name(CaptureSource s) noexcept;
std::optional<CaptureSource> parse_capture_source(std::string_view name) noexcept;

struct CaptureMeta {
  double azimuth_deg = 0.0;  // [0, 360)
  CaptureSource source = CaptureSource::kLocalFile;
  std::optional<std::string> captured_at;
  std::uint32_t width_px = 0;
  std::uint32_t height_px = 0;

  friend bool operator==(const CaptureMeta&, const CaptureMeta&) = default;
};

struct SiteImage {
  AssetRef asset;
  CaptureMeta capture;

  friend bool operator==(const SiteImage&, const SiteImage&) = default;
};

// Photogrammetry baseline estimate for a site, in hours.
struct BaselineHours {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const BaselineHours&, const BaselineHours&) = default;
};

struct SiteRecord {
  std::string site_id;  // assigned on registration when empty
  std::string name;
  std::string site_type;
  std::string material;
  std::vector<std::string> features;
  std::string location;
  std::vector<std::string> scale_elements;
  std::string illumination;
  std::optional<BaselineHours> baseline;
  std::vector<SiteImage> images;

  // Equality of the descriptive attributes; ingested images are ignored.
  bool same_attributes(const SiteRecord& other) const;

  friend bool operator==(const SiteRecord&, const SiteRecord&) = default;
};

struct ReadinessReport {
  bool has_images = false;
  double coverage_deg = 0.0;
  bool coverage_ok = false;
  std::vector<std::string> issues;
};

inline constexpr double kMinAzimuthalSpreadDeg = 90.0;

// 360 minus the largest circular gap between the sorted azimuths; 0 for
// fewer than two views. Always in [0, 360).
double azimuthal_coverage(std::span<const double> azimuths_deg);
double azimuthal_coverage(std::span<const CaptureMeta> metas);

bool is_valid_azimuth(double deg) noexcept;
bool is_valid_site_id(std::string_view id) noexcept;

// Registry of heritage sites backed by catalog/<site_id>.json documents and a
// content-addressed asset store. Readers run concurrently; writers are
// serialized.
class Catalog {
 public:
  Catalog(std::filesystem::path root, AssetStore& assets);

  std::string register_site(SiteRecord record);
  SiteImage ingest_image(const std::string& site_id, ByteView bytes, CaptureMeta meta);

  SiteRecord get(const std::string& site_id) const;
  std::optional<SiteRecord> find(const std::string& site_id) const;
  std::vector<SiteRecord> list() const;

  ReadinessReport validate_site_ready(const std::string& site_id) const;

 private:
  void persist(const SiteRecord& record) const;
  void load();

  std::filesystem::path dir_;
  AssetStore& assets_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, SiteRecord> sites_;
};

ReadinessReport readiness_of(const SiteRecord& site);

}  // namespace h3d
