#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "h3d/asset_store.hpp"
#include "h3d/bytes.hpp"

namespace h3d {

struct ImageInfo {
  MediaType media_type;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

// Header-only probe: checks magic bytes and extracts the dimensions from the
// PNG IHDR chunk or the first JPEG SOFn segment. Pixel data is not decoded.
std::optional<ImageInfo> probe_image(ByteView bytes);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit RGB raster.
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Rgb> pixels;

  Raster() = default;
  Raster(std::uint32_t w, std::uint32_t h, Rgb fill = {})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  Rgb& at(std::uint32_t x, std::uint32_t y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(std::uint32_t x, std::uint32_t y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

// Deterministic PNG encoding (fixed zlib level, no timestamps).
Bytes encode_png(const Raster& raster);

}  // namespace h3d
