#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "h3d/bytes.hpp"

namespace h3d {

enum class MediaType { kPng, kJpeg, kGltfJson, kGlb, kObj };

std::string_view media_type_name(MediaType t) noexcept;
std::optional<MediaType> parse_media_type(std::string_view name) noexcept;
// MIME type used when serving the asset over HTTP.
std::string_view mime_type(MediaType t) noexcept;

struct AssetRef {
  std::string asset_id;  // lowercase hex SHA-256 of the bytes
  MediaType media_type = MediaType::kPng;
  std::uint64_t byte_length = 0;

  friend bool operator==(const AssetRef&, const AssetRef&) = default;
};

// Append-only content-addressed blob store.
//
// Layout under the root directory:
//   assets/<first 2 hex>/<full hash>        raw bytes
//   assets/<first 2 hex>/<full hash>.meta   "media_type=..\nbyte_length=..\n"
//
// Puts are serialized; gets may run concurrently with puts because a blob is
// renamed into place only after it is fully written.
class AssetStore {
 public:
  explicit AssetStore(std::filesystem::path root);

  AssetRef put(ByteView bytes, MediaType type);
  Bytes get(std::string_view asset_id) const;
  AssetRef ref(std::string_view asset_id) const;
  bool contains(std::string_view asset_id) const;
  std::filesystem::path blob_path(std::string_view asset_id) const;

  // Number of distinct blobs on disk.
  std::size_t size() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path meta_path(std::string_view asset_id) const;

  std::filesystem::path root_;
  std::mutex write_mutex_;
};

bool is_valid_asset_id(std::string_view id) noexcept;

}  // namespace h3d
