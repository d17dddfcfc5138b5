#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace h3d {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(ByteView data);
inline std::string sha256_hex(std::string_view s) { return sha256_hex(as_bytes(s)); }

std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text);

Bytes read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, ByteView data);
inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, as_bytes(text));
}

// Appends one line (a trailing '\n' is added) and fsyncs the file.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

// ISO-8601 UTC timestamp with millisecond precision.
std::string format_utc(std::int64_t unix_millis);

}  // namespace h3d
