#include "h3d/image_info.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cstring>

#include "h3d/error.hpp"

namespace h3d {
namespace {

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint16_t be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::optional<ImageInfo> probe_png(ByteView b) {
  // signature, IHDR length, "IHDR", width, height
  if (b.size() < 24) return std::nullopt;
  if (std::memcmp(b.data() + 12, "IHDR", 4) != 0) return std::nullopt;
  ImageInfo info{MediaType::kPng, be32(b.data() + 16), be32(b.data() + 20)};
  if (info.width == 0 || info.height == 0) return std::nullopt;
  return info;
}

std::optional<ImageInfo> probe_jpeg(ByteView b) {
  std::size_t i = 2;
  while (i + 4 <= b.size()) {
    if (b[i] != 0xFF) return std::nullopt;
    std::uint8_t marker = b[i + 1];
    if (marker == 0xFF) {  // fill byte
      ++i;
      continue;
    }
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      i += 2;
      continue;
    }
    if (marker == 0xD9 || marker == 0xDA) return std::nullopt;  // no frame header before scan
    std::uint16_t len = be16(b.data() + i + 2);
    if (len < 2 || i + 2 + len > b.size()) return std::nullopt;
    bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
    if (sof) {
      if (len < 7) return std::nullopt;
      ImageInfo info{MediaType::kJpeg, be16(b.data() + i + 7), be16(b.data() + i + 5)};
      if (info.width == 0 || info.height == 0) return std::nullopt;
      return info;
    }
    i += 2 + len;
  }
  return std::nullopt;
}

}  // namespace

std::optional<ImageInfo> probe_image(ByteView bytes) {
  if (bytes.size() >= kPngMagic.size() &&
      std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
    return probe_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return probe_jpeg(bytes);
  }
  return std::nullopt;
}

Bytes encode_png(const Raster& raster) {
  if (raster.width == 0 || raster.height == 0 ||
      raster.pixels.size() != static_cast<std::size_t>(raster.width) * raster.height) {
    throw Error(ErrorCode::kInvalidArgument, "raster dimensions do not match pixel buffer");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kInternal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kInternal, "png_create_info_struct failed");
  }

  Bytes out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kInternal, "libpng error while encoding");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* dst = static_cast<Bytes*>(png_get_io_ptr(p));
        dst->insert(dst->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, raster.width, raster.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_write_info(png, info);
  static_assert(sizeof(Rgb) == 3);
  for (std::uint32_t y = 0; y < raster.height; ++y) {
    auto* row = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(raster.pixels.data() + static_cast<std::size_t>(y) * raster.width));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace h3d
