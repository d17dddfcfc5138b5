#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "h3d/bytes.hpp"
#include "h3d/catalog.hpp"
#include "h3d/image_info.hpp"

namespace h3d::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("h3d-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Small PNG whose pixels depend on `shade`, so different shades hash apart.
inline Bytes small_png(std::uint32_t w = 16, std::uint32_t h = 12, std::uint8_t shade = 90) {
  Raster r(w, h, Rgb{shade, static_cast<std::uint8_t>(shade / 2), 40});
  r.at(0, 0) = Rgb{255, 255, 255};
  return encode_png(r);
}

// A JPEG stream reduced to SOI, a baseline SOF0 frame header and EOI. Enough
// for header probing, which is all ingestion does.
inline Bytes jpeg_header(std::uint16_t w, std::uint16_t h) {
  return Bytes{0xFF, 0xD8,                                   // SOI
               0xFF, 0xC0, 0x00, 0x11, 0x08,                 // SOF0, length 17, 8-bit
               static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h & 0xFF),
               static_cast<std::uint8_t>(w >> 8), static_cast<std::uint8_t>(w & 0xFF),
               0x03, 0x01, 0x22, 0x00, 0x02, 0x11, 0x01, 0x03, 0x11, 0x01,
               0xFF, 0xD9};                                  // EOI
}

// The Choto Sona Mosque attribute record.
inline SiteRecord choto_sona() {
  SiteRecord r;
  r.name = "Choto Sona Mosque, Gaur, Naogaon";
  r.site_type = "Single-domed mosque";
  r.material = "Gray sandstone";
  r.features = {"Bronze dome top", "carved façade", "ornamental lattice"};
  r.location = "Gaur, Naogaon";
  r.baseline = BaselineHours{4, 6};
  return r;
}

}  // namespace h3d::testing
