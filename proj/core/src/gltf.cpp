#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "h3d/error.hpp"
#include "h3d/mesh.hpp"

namespace h3d {

using nlohmann::json;

namespace {

constexpr std::uint32_t kGlbMagic = 0x46546C67;  // "glTF"
constexpr std::uint32_t kChunkJson = 0x4E4F534A;
constexpr std::uint32_t kChunkBin = 0x004E4942;

constexpr int kFloat = 5126;
constexpr int kUByte = 5121;
constexpr int kUShort = 5123;
constexpr int kUInt = 5125;

constexpr int kTargetArrayBuffer = 34962;
constexpr int kTargetElementArrayBuffer = 34963;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedAsset, what); }
[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidDocument, what); }

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void put_le32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

int type_components(const std::string& type) {
  if (type == "SCALAR") return 1;
  if (type == "VEC2") return 2;
  if (type == "VEC3") return 3;
  if (type == "VEC4") return 4;
  if (type == "MAT2") return 4;
  if (type == "MAT3") return 9;
  if (type == "MAT4") return 16;
  return 0;
}

const char* components_type(int n) {
  switch (n) {
    case 1: return "SCALAR";
    case 2: return "VEC2";
    case 3: return "VEC3";
    default: return "VEC4";
  }
}

std::size_t component_size(int component_type) {
  switch (component_type) {
    case 5120:
    case 5121: return 1;
    case 5122:
    case 5123: return 2;
    case 5125:
    case 5126: return 4;
    default: return 0;
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid("missing required field '" + std::string(key) + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid("field '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

Bytes decode_data_uri(const std::string& uri) {
  auto comma = uri.find(',');
  if (comma == std::string::npos || uri.compare(0, 5, "data:") != 0) malformed("malformed data URI");
  auto header = uri.substr(0, comma);
  if (header.size() < 7 || header.compare(header.size() - 7, 7, ";base64") != 0) {
    malformed("only base64 data URIs are supported");
  }
  try {
    return base64_decode(std::string_view(uri).substr(comma + 1));
  } catch (const Error&) {
    malformed("invalid base64 payload in data URI");
  }
}

class Reader {
 public:
  Reader(const json& root, std::vector<Bytes> buffers) : root_(root), buffers_(std::move(buffers)) {}

  struct View {
    const std::uint8_t* data = nullptr;
    std::size_t length = 0;
    std::size_t stride = 0;
  };

  View buffer_view(int index) const {
    const auto& views = root_.value("bufferViews", json::array());
    if (index < 0 || static_cast<std::size_t>(index) >= views.size()) {
      malformed("bufferView " + std::to_string(index) + " out of range");
    }
    const auto& v = views[index];
    auto where = "bufferView " + std::to_string(index);
    int buffer = get_required<int>(v, "buffer", where);
    auto offset = get_or<std::size_t>(v, "byteOffset", 0);
    auto length = get_required<std::size_t>(v, "byteLength", where);
    if (buffer < 0 || static_cast<std::size_t>(buffer) >= buffers_.size()) {
      malformed(where + " references missing buffer " + std::to_string(buffer));
    }
    const auto& buf = buffers_[buffer];
    if (offset > buf.size() || length > buf.size() - offset) malformed(where + " exceeds its buffer");
    return {buf.data() + offset, length, get_or<std::size_t>(v, "byteStride", 0)};
  }

  struct Accessor {
    int component_type = 0;
    int components = 0;
    std::size_t count = 0;
    bool normalized = false;
  };

  Accessor accessor_info(int index) const {
    const auto& accessors = root_.value("accessors", json::array());
    if (index < 0 || static_cast<std::size_t>(index) >= accessors.size()) {
      malformed("accessor " + std::to_string(index) + " out of range");
    }
    const auto& a = accessors[index];
    auto where = "accessor " + std::to_string(index);
    Accessor info;
    info.component_type = get_required<int>(a, "componentType", where);
    info.components = type_components(get_required<std::string>(a, "type", where));
    info.count = get_required<std::size_t>(a, "count", where);
    info.normalized = get_or<bool>(a, "normalized", false);
    if (info.components == 0 || component_size(info.component_type) == 0) {
      invalid(where + " has an unsupported type");
    }
    if (a.contains("sparse")) invalid(where + " uses sparse storage, which is not supported");
    return info;
  }

  // Raw element bytes, bounds-checked. Returns nullptr data when the accessor
  // has no buffer view (all zeros).
  View accessor_bytes(int index, const Accessor& info) const {
    const auto& a = root_["accessors"][index];
    if (!a.contains("bufferView")) return {};
    auto view = buffer_view(get_or<int>(a, "bufferView", -1));
    auto offset = get_or<std::size_t>(a, "byteOffset", 0);
    auto elem = component_size(info.component_type) * static_cast<std::size_t>(info.components);
    auto stride = view.stride ? view.stride : elem;
    if (info.count > 0) {
      if (stride < elem) malformed("accessor " + std::to_string(index) + " stride smaller than element");
      std::size_t need = offset + stride * (info.count - 1) + elem;
      if (need > view.length || offset > view.length) {
        malformed("accessor " + std::to_string(index) + " reads past the end of its bufferView");
      }
    }
    return {view.data + offset, view.length - std::min(offset, view.length), stride};
  }

  std::vector<float> floats(int index, const Accessor& info) const {
    auto view = accessor_bytes(index, info);
    std::vector<float> out(info.count * static_cast<std::size_t>(info.components), 0.0f);
    if (!view.data) return out;
    for (std::size_t i = 0; i < info.count; ++i) {
      std::memcpy(out.data() + i * info.components, view.data + i * view.stride,
                  sizeof(float) * static_cast<std::size_t>(info.components));
    }
    return out;
  }

  std::vector<std::uint32_t> indices(int index) const {
    auto info = accessor_info(index);
    if (info.components != 1) invalid("index accessor " + std::to_string(index) + " is not SCALAR");
    if (info.component_type != kUByte && info.component_type != kUShort && info.component_type != kUInt) {
      invalid("index accessor " + std::to_string(index) + " has a non-integer component type");
    }
    auto view = accessor_bytes(index, info);
    std::vector<std::uint32_t> out(info.count, 0);
    if (!view.data) return out;
    for (std::size_t i = 0; i < info.count; ++i) {
      const auto* p = view.data + i * view.stride;
      switch (info.component_type) {
        case kUByte: out[i] = p[0]; break;
        case kUShort: out[i] = static_cast<std::uint32_t>(p[0] | (p[1] << 8)); break;
        default: out[i] = le32(p); break;
      }
    }
    return out;
  }

 private:
  const json& root_;
  std::vector<Bytes> buffers_;
};

template <std::size_t N>
std::array<float, N> float_array(const json& node, const char* key, std::array<float, N> fallback) {
  if (!node.contains(key)) return fallback;
  const auto& arr = node[key];
  if (!arr.is_array() || arr.size() != N) invalid(std::string("node field '") + key + "' has the wrong size");
  std::array<float, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!arr[i].is_number()) invalid(std::string("node field '") + key + "' is not numeric");
    out[i] = arr[i].get<float>();
  }
  return out;
}

MeshDocument parse_json_document(const json& root, const Bytes* glb_bin) {
  if (!root.is_object()) malformed("glTF root is not a JSON object");
  if (!root.contains("asset") || !root["asset"].is_object()) invalid("missing required field 'asset'");
  MeshDocument doc;
  doc.asset_version = get_required<std::string>(root["asset"], "version", "asset");
  if (doc.asset_version != "2.0") {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported glTF version '" + doc.asset_version + "'");
  }
  doc.generator = get_or<std::string>(root["asset"], "generator", "");

  if (root.contains("extensionsRequired") && !root["extensionsRequired"].empty()) {
    invalid("required extension '" + root["extensionsRequired"][0].get<std::string>() +
            "' is not supported");
  }
  doc.extensions_used = get_or<std::vector<std::string>>(root, "extensionsUsed", {});
  for (const auto& ext : doc.extensions_used) {
    doc.parse_warnings.push_back("extension '" + ext + "' preserved but not interpreted");
  }

  std::vector<Bytes> buffers;
  const auto& jbuffers = root.value("buffers", json::array());
  for (std::size_t i = 0; i < jbuffers.size(); ++i) {
    const auto& b = jbuffers[i];
    auto where = "buffer " + std::to_string(i);
    auto length = get_required<std::size_t>(b, "byteLength", where);
    Bytes data;
    if (b.contains("uri")) {
      auto uri = get_required<std::string>(b, "uri", where);
      if (uri.rfind("data:", 0) != 0) invalid(where + " references external uri '" + uri + "'");
      data = decode_data_uri(uri);
    } else if (i == 0 && glb_bin) {
      data = *glb_bin;
    } else {
      invalid(where + " has no uri and no GLB binary chunk");
    }
    if (data.size() < length) malformed(where + " is shorter than its byteLength");
    data.resize(length);
    buffers.push_back(std::move(data));
  }
  Reader reader(root, std::move(buffers));

  const auto& jmeshes = root.value("meshes", json::array());
  for (std::size_t mi = 0; mi < jmeshes.size(); ++mi) {
    const auto& jm = jmeshes[mi];
    Mesh mesh;
    mesh.name = get_or<std::string>(jm, "name", "");
    const auto& prims = jm.value("primitives", json::array());
    for (std::size_t pi = 0; pi < prims.size(); ++pi) {
      const auto& jp = prims[pi];
      auto where = "mesh " + std::to_string(mi) + " primitive " + std::to_string(pi);
      Primitive prim;
      prim.mode = get_or<int>(jp, "mode", kModeTriangles);
      if (!jp.contains("attributes") || !jp["attributes"].is_object()) {
        invalid("missing required field 'attributes' in " + where);
      }
      const auto& attrs = jp["attributes"];
      if (!attrs.contains("POSITION")) invalid("missing required attribute POSITION in " + where);
      for (const auto& [name, value] : attrs.items()) {
        if (!value.is_number_integer()) invalid("attribute " + name + " in " + where + " is not an index");
        int acc = value.get<int>();
        auto info = reader.accessor_info(acc);
        if (name == "POSITION") {
          if (info.component_type != kFloat || info.components != 3) {
            invalid("POSITION in " + where + " must be float32 VEC3");
          }
          auto values = reader.floats(acc, info);
          prim.positions.resize(info.count);
          for (std::size_t v = 0; v < info.count; ++v) {
            prim.positions[v] = {values[3 * v], values[3 * v + 1], values[3 * v + 2]};
          }
        } else if (info.component_type == kFloat && info.components <= 4) {
          prim.attributes[name] = FloatAttribute{info.components, reader.floats(acc, info)};
        } else {
          doc.parse_warnings.push_back("dropped non-float attribute " + name + " in " + where);
        }
      }
      if (jp.contains("indices")) {
        prim.indexed = true;
        prim.indices = reader.indices(get_required<int>(jp, "indices", where));
      } else {
        prim.indexed = false;
      }
      if (jp.contains("material")) prim.material = get_required<int>(jp, "material", where);
      mesh.primitives.push_back(std::move(prim));
    }
    doc.meshes.push_back(std::move(mesh));
  }

  const auto& jnodes = root.value("nodes", json::array());
  for (const auto& jn : jnodes) {
    Node node;
    node.name = get_or<std::string>(jn, "name", "");
    if (jn.contains("mesh")) node.mesh = get_or<int>(jn, "mesh", -1);
    node.children = get_or<std::vector<int>>(jn, "children", {});
    node.translation = float_array<3>(jn, "translation", {0, 0, 0});
    node.rotation = float_array<4>(jn, "rotation", {0, 0, 0, 1});
    node.scale = float_array<3>(jn, "scale", {1, 1, 1});
    if (jn.contains("matrix")) node.matrix = float_array<16>(jn, "matrix", {});
    doc.nodes.push_back(std::move(node));
  }

  if (root.contains("scenes") && root["scenes"].is_array() && !root["scenes"].empty()) {
    auto scene = get_or<std::size_t>(root, "scene", 0);
    if (scene >= root["scenes"].size()) invalid("scene index out of range");
    doc.has_scene = true;
    doc.scene_roots = get_or<std::vector<int>>(root["scenes"][scene], "nodes", {});
  }

  auto passthrough = [&](const char* key) { return root.value(key, json::array()); };
  doc.materials = passthrough("materials");
  doc.textures = passthrough("textures");
  doc.samplers = passthrough("samplers");
  doc.images = passthrough("images");
  for (auto& img : doc.images) {
    if (!img.contains("bufferView")) continue;
    auto view = reader.buffer_view(img["bufferView"].get<int>());
    auto mime = img.value("mimeType", std::string("application/octet-stream"));
    img["uri"] = "data:" + mime + ";base64," + base64_encode(ByteView(view.data, view.length));
    img.erase("bufferView");
  }
  return doc;
}

json parse_json_bytes(ByteView bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    malformed(std::string("malformed glTF JSON: ") + e.what());
  }
}

}  // namespace

MeshDocument parse_gltf(ByteView bytes) {
  if (bytes.size() >= 4 && le32(bytes.data()) == kGlbMagic) {
    if (bytes.size() < 20) malformed("truncated GLB header");
    auto version = le32(bytes.data() + 4);
    if (version != 2) {
      throw Error(ErrorCode::kUnsupportedVersion, "unsupported GLB container version " + std::to_string(version));
    }
    auto total = le32(bytes.data() + 8);
    if (total != bytes.size()) malformed("GLB length field does not match the byte stream");
    std::size_t pos = 12;
    std::optional<ByteView> json_chunk;
    std::optional<Bytes> bin_chunk;
    while (pos + 8 <= bytes.size()) {
      auto len = le32(bytes.data() + pos);
      auto type = le32(bytes.data() + pos + 4);
      pos += 8;
      if (len > bytes.size() - pos) malformed("truncated GLB chunk");
      auto chunk = bytes.subspan(pos, len);
      if (type == kChunkJson && !json_chunk) {
        json_chunk = chunk;
      } else if (type == kChunkBin && !bin_chunk) {
        bin_chunk = Bytes(chunk.begin(), chunk.end());
      }
      pos += len;
    }
    if (pos != bytes.size()) malformed("trailing bytes after last GLB chunk");
    if (!json_chunk) malformed("GLB has no JSON chunk");
    auto root = parse_json_bytes(*json_chunk);
    return parse_json_document(root, bin_chunk ? &*bin_chunk : nullptr);
  }
  auto root = parse_json_bytes(bytes);
  return parse_json_document(root, nullptr);
}

namespace {

class BufferBuilder {
 public:
  int add_view(const void* data, std::size_t length, int target) {
    while (bytes_.size() % 4) bytes_.push_back(0);
    json view = {{"buffer", 0}, {"byteOffset", bytes_.size()}, {"byteLength", length}};
    if (target) view["target"] = target;
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + length);
    views_.push_back(std::move(view));
    return static_cast<int>(views_.size() - 1);
  }

  int add_accessor(json accessor) {
    accessors_.push_back(std::move(accessor));
    return static_cast<int>(accessors_.size() - 1);
  }

  const Bytes& bytes() const { return bytes_; }
  json& views() { return views_; }
  json& accessors() { return accessors_; }

 private:
  Bytes bytes_;
  json views_ = json::array();
  json accessors_ = json::array();
};

json vec_json(const float* v, std::size_t n) {
  json a = json::array();
  for (std::size_t i = 0; i < n; ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Bytes write_gltf(const MeshDocument& doc, Container container) {
  auto report = validate(doc);
  if (!report.ok()) {
    throw Error(ErrorCode::kInvalidDocument,
                "cannot write invalid document: " + report.errors.front().code + ": " +
                    report.errors.front().message);
  }

  BufferBuilder bb;
  json meshes = json::array();
  for (const auto& mesh : doc.meshes) {
    json jprims = json::array();
    for (const auto& prim : mesh.primitives) {
      json attrs = json::object();
      {
        std::vector<float> flat;
        flat.reserve(prim.positions.size() * 3);
        std::array<float, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (std::size_t i = 0; i < prim.positions.size(); ++i) {
          for (int k = 0; k < 3; ++k) {
            float v = prim.positions[i][k];
            flat.push_back(v);
            if (i == 0 || v < lo[k]) lo[k] = v;
            if (i == 0 || v > hi[k]) hi[k] = v;
          }
        }
        json acc = {{"componentType", kFloat}, {"count", prim.positions.size()}, {"type", "VEC3"}};
        if (!prim.positions.empty()) {
          acc["bufferView"] = bb.add_view(flat.data(), flat.size() * sizeof(float), kTargetArrayBuffer);
          acc["min"] = vec_json(lo.data(), 3);
          acc["max"] = vec_json(hi.data(), 3);
        }
        attrs["POSITION"] = bb.add_accessor(std::move(acc));
      }
      for (const auto& [name, attr] : prim.attributes) {
        json acc = {{"componentType", kFloat}, {"count", attr.count()}, {"type", components_type(attr.components)}};
        if (!attr.values.empty()) {
          acc["bufferView"] = bb.add_view(attr.values.data(), attr.values.size() * sizeof(float), kTargetArrayBuffer);
        }
        attrs[name] = bb.add_accessor(std::move(acc));
      }
      json jp = {{"attributes", attrs}, {"mode", prim.mode}};
      if (prim.indexed) {
        std::uint32_t max_index = 0;
        for (auto i : prim.indices) max_index = std::max(max_index, i);
        json acc = {{"count", prim.indices.size()}, {"type", "SCALAR"}};
        if (max_index < 0xFFFF) {
          std::vector<std::uint16_t> narrow(prim.indices.begin(), prim.indices.end());
          acc["componentType"] = kUShort;
          if (!narrow.empty()) {
            acc["bufferView"] = bb.add_view(narrow.data(), narrow.size() * 2, kTargetElementArrayBuffer);
          }
        } else {
          acc["componentType"] = kUInt;
          acc["bufferView"] = bb.add_view(prim.indices.data(), prim.indices.size() * 4, kTargetElementArrayBuffer);
        }
        jp["indices"] = bb.add_accessor(std::move(acc));
      }
      if (prim.material) jp["material"] = *prim.material;
      jprims.push_back(std::move(jp));
    }
    json jm = {{"primitives", jprims}};
    if (!mesh.name.empty()) jm["name"] = mesh.name;
    meshes.push_back(std::move(jm));
  }

  json nodes = json::array();
  for (const auto& node : doc.nodes) {
    json jn = json::object();
    if (!node.name.empty()) jn["name"] = node.name;
    if (node.mesh) jn["mesh"] = *node.mesh;
    if (!node.children.empty()) jn["children"] = node.children;
    if (node.matrix) {
      jn["matrix"] = vec_json(node.matrix->data(), 16);
    } else {
      if (node.translation != Vec3{0, 0, 0}) jn["translation"] = vec_json(node.translation.data(), 3);
      if (node.rotation != Quat{0, 0, 0, 1}) jn["rotation"] = vec_json(node.rotation.data(), 4);
      if (node.scale != Vec3{1, 1, 1}) jn["scale"] = vec_json(node.scale.data(), 3);
    }
    nodes.push_back(std::move(jn));
  }

  json root = json::object();
  root["asset"] = {{"version", doc.asset_version}};
  if (!doc.generator.empty()) root["asset"]["generator"] = doc.generator;
  if (!meshes.empty()) root["meshes"] = std::move(meshes);
  if (!nodes.empty()) root["nodes"] = std::move(nodes);
  if (doc.has_scene) {
    root["scene"] = 0;
    root["scenes"] = json::array({json{{"nodes", doc.scene_roots}}});
  }
  if (!bb.accessors().empty()) root["accessors"] = bb.accessors();
  if (!bb.views().empty()) root["bufferViews"] = bb.views();
  if (!doc.materials.empty()) root["materials"] = doc.materials;
  if (!doc.textures.empty()) root["textures"] = doc.textures;
  if (!doc.samplers.empty()) root["samplers"] = doc.samplers;
  if (!doc.images.empty()) root["images"] = doc.images;
  if (!doc.extensions_used.empty()) root["extensionsUsed"] = doc.extensions_used;

  const auto& bin = bb.bytes();
  if (container == Container::kJson) {
    if (!bin.empty()) {
      root["buffers"] = json::array(
          {json{{"byteLength", bin.size()},
                {"uri", "data:application/octet-stream;base64," + base64_encode(bin)}}});
    }
    auto text = root.dump(2);
    text.push_back('\n');
    return to_bytes(text);
  }

  if (!bin.empty()) root["buffers"] = json::array({json{{"byteLength", bin.size()}}});
  auto text = root.dump();
  while (text.size() % 4) text.push_back(' ');
  std::size_t bin_padded = (bin.size() + 3) & ~std::size_t{3};
  std::size_t total = 12 + 8 + text.size() + (bin.empty() ? 0 : 8 + bin_padded);
  if (total > std::numeric_limits<std::uint32_t>::max()) invalid("document too large for GLB");
  Bytes out;
  out.reserve(total);
  put_le32(out, kGlbMagic);
  put_le32(out, 2);
  put_le32(out, static_cast<std::uint32_t>(total));
  put_le32(out, static_cast<std::uint32_t>(text.size()));
  put_le32(out, kChunkJson);
  out.insert(out.end(), text.begin(), text.end());
  if (!bin.empty()) {
    put_le32(out, static_cast<std::uint32_t>(bin_padded));
    put_le32(out, kChunkBin);
    out.insert(out.end(), bin.begin(), bin.end());
    out.resize(total, 0);
  }
  return out;
}

bool semantically_equal(const MeshDocument& a, const MeshDocument& b) {
  return a.asset_version == b.asset_version && a.generator == b.generator && a.meshes == b.meshes &&
         a.nodes == b.nodes && a.scene_roots == b.scene_roots && a.has_scene == b.has_scene &&
         a.materials == b.materials && a.textures == b.textures && a.samplers == b.samplers &&
         a.images == b.images && a.extensions_used == b.extensions_used;
}

}  // namespace h3d
