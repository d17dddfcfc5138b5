#include "h3d/asset_store.hpp"

#include <fstream>
#include <sstream>

#include "h3d/error.hpp"

namespace h3d {

std::string_view media_type_name(MediaType t) noexcept {
  switch (t) {
    case MediaType::kPng: return "png";
    case MediaType::kJpeg: return "jpeg";
    case MediaType::kGltfJson: return "gltf_json";
    case MediaType::kGlb: return "glb";
    case MediaType::kObj: return "obj";
  }
  return "png";
}

std::optional<MediaType> parse_media_type(std::string_view name) noexcept {
  for (auto t : {MediaType::kPng, MediaType::kJpeg, MediaType::kGltfJson, MediaType::kGlb,
                 MediaType::kObj}) {
    if (media_type_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view mime_type(MediaType t) noexcept {
  switch (t) {
    case MediaType::kPng: return "image/png";
    case MediaType::kJpeg: return "image/jpeg";
    case MediaType::kGltfJson: return "model/gltf+json";
    case MediaType::kGlb: return "model/gltf-binary";
    case MediaType::kObj: return "text/plain";
  }
  return "application/octet-stream";
}

bool is_valid_asset_id(std::string_view id) noexcept {
  if (id.size() != 64) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

AssetStore::AssetStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_ / "assets");
}

std::filesystem::path AssetStore::blob_path(std::string_view asset_id) const {
  if (!is_valid_asset_id(asset_id)) {
    throw Error(ErrorCode::kAssetNotFound, "invalid asset id '" + std::string(asset_id) + "'");
  }
  return root_ / "assets" / std::string(asset_id.substr(0, 2)) / std::string(asset_id);
}

std::filesystem::path AssetStore::meta_path(std::string_view asset_id) const {
  auto p = blob_path(asset_id);
  p += ".meta";
  return p;
}

AssetRef AssetStore::put(ByteView bytes, MediaType type) {
  AssetRef ref{sha256_hex(bytes), type, bytes.size()};
  std::lock_guard lock(write_mutex_);
  auto blob = blob_path(ref.asset_id);
  if (std::filesystem::exists(meta_path(ref.asset_id))) {
    return this->ref(ref.asset_id);
  }
  write_file_atomic(blob, bytes);
  std::ostringstream meta;
  meta << "media_type=" << media_type_name(type) << "\n"
       << "byte_length=" << bytes.size() << "\n";
  // The sidecar is written last; its presence marks the blob as complete.
  write_file_atomic(meta_path(ref.asset_id), meta.str());
  return ref;
}

Bytes AssetStore::get(std::string_view asset_id) const {
  if (!contains(asset_id)) {
    throw Error(ErrorCode::kAssetNotFound, "asset " + std::string(asset_id) + " not found");
  }
  return read_file(blob_path(asset_id));
}

AssetRef AssetStore::ref(std::string_view asset_id) const {
  if (!contains(asset_id)) {
    throw Error(ErrorCode::kAssetNotFound, "asset " + std::string(asset_id) + " not found");
  }
  std::ifstream in(meta_path(asset_id));
  AssetRef out{std::string(asset_id), MediaType::kPng, 0};
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "media_type") {
      auto t = parse_media_type(value);
      if (!t) throw Error(ErrorCode::kIo, "bad media_type in sidecar for " + out.asset_id);
      out.media_type = *t;
    } else if (key == "byte_length") {
      out.byte_length = std::stoull(value);
    }
  }
  return out;
}

bool AssetStore::contains(std::string_view asset_id) const {
  if (!is_valid_asset_id(asset_id)) return false;
  return std::filesystem::exists(meta_path(asset_id));
}

std::size_t AssetStore::size() const {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root_ / "assets")) {
    if (e.is_regular_file() && e.path().extension() == ".meta") ++n;
  }
  return n;
}

}  // namespace h3d
