#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace h3d {

// Flat `key = value` text with `#` comments and optional `[section]` headers.
// Keys inside a section are returned as "section.key".
std::map<std::string, std::string> parse_key_values(std::string_view text);

struct ServiceConfig {
  std::filesystem::path data_dir = "h3d-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path backends_file;  // empty: built-in mock profiles only
  std::filesystem::path static_dir;     // optional operator console assets
  int workers = 2;
  bool auto_decimate = false;

  // Overlays values from a key=value file, then H3D_DATA_DIR / H3D_PORT.
  static ServiceConfig load(const std::filesystem::path& file);
  void apply_env();
  void apply(const std::map<std::string, std::string>& kv);
};

}  // namespace h3d
