#include "h3d/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <sstream>

#include "h3d/error.hpp"
#include "h3d/image_info.hpp"
#include "h3d/json_io.hpp"

namespace h3d {

std::string_view capture_source_name(CaptureSource s) noexcept {
  switch (s) {
    case CaptureSource::kStreetViewUrl: return "street_view_url";
    case CaptureSource::kLocalFile: return "local_file";
    case CaptureSource::kRemoteUrl: return "remote_url";
  }
  return "local_file";
}

std::optional<CaptureSource> parse_capture_source(std::string_view name) noexcept {
  for (auto s : {CaptureSource::kStreetViewUrl, CaptureSource::kLocalFile, CaptureSource::kRemoteUrl}) {
    if (capture_source_name(s) == name) return s;
  }
  return std::nullopt;
}

bool SiteRecord::same_attributes(const SiteRecord& o) const {
  return name == o.name && site_type == o.site_type && material == o.material &&
         features == o.features && location == o.location && scale_elements == o.scale_elements &&
         illumination == o.illumination && baseline == o.baseline;
}

bool is_valid_azimuth(double deg) noexcept {
  return std::isfinite(deg) && deg >= 0.0 && deg < 360.0;
}

bool is_valid_site_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '_';
  });
}

double azimuthal_coverage(std::span<const double> azimuths_deg) {
  if (azimuths_deg.size() < 2) return 0.0;
  std::vector<double> a(azimuths_deg.begin(), azimuths_deg.end());
  std::sort(a.begin(), a.end());
  double max_gap = a.front() + 360.0 - a.back();
  for (std::size_t i = 1; i < a.size(); ++i) max_gap = std::max(max_gap, a[i] - a[i - 1]);
  double spread = 360.0 - max_gap;
  if (spread < 0.0) spread = 0.0;
  if (spread >= 360.0) spread = 0.0;
  return spread;
}

double azimuthal_coverage(std::span<const CaptureMeta> metas) {
  std::vector<double> a;
  a.reserve(metas.size());
  for (const auto& m : metas) a.push_back(m.azimuth_deg);
  return azimuthal_coverage(a);
}

ReadinessReport readiness_of(const SiteRecord& site) {
  ReadinessReport r;
  r.has_images = !site.images.empty();
  std::vector<double> az;
  for (const auto& img : site.images) az.push_back(img.capture.azimuth_deg);
  r.coverage_deg = azimuthal_coverage(az);
  r.coverage_ok = r.coverage_deg >= kMinAzimuthalSpreadDeg;
  if (!r.has_images) r.issues.push_back("site has no ingested images");
  if (!r.coverage_ok) {
    std::ostringstream msg;
    msg << "azimuthal spread " << r.coverage_deg << " deg is below the " << kMinAzimuthalSpreadDeg
        << " deg minimum";
    r.issues.push_back(msg.str());
  }
  return r;
}

namespace {

std::string slugify(std::string_view name) {
  std::string out;
  bool dash = false;
  for (unsigned char c : name) {
    if (std::isalnum(c) && c < 0x80) {
      out.push_back(static_cast<char>(std::tolower(c)));
      dash = false;
    } else if (!out.empty() && !dash) {
      out.push_back('-');
      dash = true;
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  if (out.size() > 48) out.resize(48);
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "site" : out;
}

std::string derive_site_id(const SiteRecord& r) {
  auto j = to_json(r);
  j.erase("site_id");
  j.erase("images");
  return slugify(r.name) + "-" + sha256_hex(j.dump()).substr(0, 8);
}

}  // namespace

Catalog::Catalog(std::filesystem::path root, AssetStore& assets)
    : dir_(std::move(root) / "catalog"), assets_(assets) {
  std::filesystem::create_directories(dir_);
  load();
}

void Catalog::load() {
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    auto bytes = read_file(e.path());
    auto site = site_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    sites_[site.site_id] = std::move(site);
  }
}

void Catalog::persist(const SiteRecord& record) const {
  write_file_atomic(dir_ / (record.site_id + ".json"), to_json(record).dump(2) + "\n");
}

std::string Catalog::register_site(SiteRecord record) {
  if (record.name.empty()) throw Error(ErrorCode::kEmptyName, "site name must not be empty");
  if (record.baseline && (record.baseline->low <= 0 || record.baseline->low > record.baseline->high)) {
    throw Error(ErrorCode::kInvalidArgument, "baseline hours must satisfy 0 < low <= high");
  }
  if (record.site_id.empty()) {
    record.site_id = derive_site_id(record);
  } else if (!is_valid_site_id(record.site_id)) {
    throw Error(ErrorCode::kInvalidArgument,
                "site_id '" + record.site_id + "' must match [A-Za-z0-9_-]{1,128}");
  }

  std::unique_lock lock(mutex_);
  if (auto it = sites_.find(record.site_id); it != sites_.end()) {
    if (!it->second.same_attributes(record)) {
      throw Error(ErrorCode::kDuplicateSite,
                  "site_id '" + record.site_id + "' already registered with different content");
    }
    return record.site_id;
  }
  record.images.clear();
  persist(record);
  auto id = record.site_id;
  sites_.emplace(id, std::move(record));
  return id;
}

SiteImage Catalog::ingest_image(const std::string& site_id, ByteView bytes, CaptureMeta meta) {
  if (!is_valid_azimuth(meta.azimuth_deg)) {
    std::ostringstream msg;
    msg << "azimuth " << meta.azimuth_deg << " outside [0, 360)";
    throw Error(ErrorCode::kInvalidAzimuth, msg.str());
  }
  auto info = probe_image(bytes);
  if (!info) throw Error(ErrorCode::kUndecodableImage, "bytes are not a PNG or JPEG image");
  meta.width_px = info->width;
  meta.height_px = info->height;

  std::unique_lock lock(mutex_);
  auto it = sites_.find(site_id);
  if (it == sites_.end()) throw Error(ErrorCode::kSiteNotFound, "site '" + site_id + "' not found");
  auto ref = assets_.put(bytes, info->media_type);
  auto& images = it->second.images;
  auto existing = std::find_if(images.begin(), images.end(),
                               [&](const SiteImage& i) { return i.asset.asset_id == ref.asset_id; });
  if (existing != images.end()) return *existing;
  SiteImage image{ref, meta};
  images.push_back(image);
  try {
    persist(it->second);
  } catch (...) {
    images.pop_back();
    throw;
  }
  return image;
}

std::optional<SiteRecord> Catalog::find(const std::string& site_id) const {
  std::shared_lock lock(mutex_);
  auto it = sites_.find(site_id);
  if (it == sites_.end()) return std::nullopt;
  return it->second;
}

SiteRecord Catalog::get(const std::string& site_id) const {
  auto s = find(site_id);
  if (!s) throw Error(ErrorCode::kSiteNotFound, "site '" + site_id + "' not found");
  return *s;
}

std::vector<SiteRecord> Catalog::list() const {
  std::shared_lock lock(mutex_);
  std::vector<SiteRecord> out;
  out.reserve(sites_.size());
  for (const auto& [_, s] : sites_) out.push_back(s);
  return out;
}

ReadinessReport Catalog::validate_site_ready(const std::string& site_id) const {
  return readiness_of(get(site_id));
}

}  // namespace h3d
