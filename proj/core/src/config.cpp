#include "h3d/config.hpp"

#include <cstdlib>

#include "h3d/bytes.hpp"
#include "h3d/error.hpp"

namespace h3d {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' expects a boolean, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int n = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(line_no) + ": empty key");
    }
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

void ServiceConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "data_dir") data_dir = value;
    else if (key == "host") host = value;
    else if (key == "port") port = parse_int(key, value);
    else if (key == "backends_file") backends_file = value;
    else if (key == "static_dir") static_dir = value;
    else if (key == "workers") workers = parse_int(key, value);
    else if (key == "auto_decimate") auto_decimate = parse_bool(key, value);
    else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidArgument, "port out of range");
  if (workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
}

void ServiceConfig::apply_env() {
  if (const char* d = std::getenv("H3D_DATA_DIR"); d && *d) data_dir = d;
  if (const char* p = std::getenv("H3D_PORT"); p && *p) port = parse_int("H3D_PORT", p);
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& file) {
  ServiceConfig cfg;
  if (!file.empty()) cfg.apply(parse_key_values(to_string(read_file(file))));
  cfg.apply_env();
  return cfg;
}

}  // namespace h3d
