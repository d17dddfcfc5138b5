#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h3d/bytes.hpp"

namespace h3d {

using Vec3 = std::array<float, 3>;
using Quat = std::array<float, 4>;  // x, y, z, w
using Mat4 = std::array<float, 16>;  // column-major, as in glTF

inline constexpr int kModeTriangles = 4;

// A float32 vertex attribute with 1 to 4 components per vertex.
struct FloatAttribute {
  int components = 3;
  std::vector<float> values;

  std::size_t count() const { return components > 0 ? values.size() / components : 0; }
  friend bool operator==(const FloatAttribute&, const FloatAttribute&) = default;
};

struct Primitive {
  int mode = kModeTriangles;
  std::vector<Vec3> positions;
  // Additional float attributes (NORMAL, TEXCOORD_0, ...), carried through.
  std::map<std::string, FloatAttribute> attributes;
  bool indexed = true;
  std::vector<std::uint32_t> indices;
  std::optional<int> material;

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct Mesh {
  std::string name;
  std::vector<Primitive> primitives;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

struct Node {
  std::string name;
  std::optional<int> mesh;
  std::vector<int> children;
  Vec3 translation{0, 0, 0};
  Quat rotation{0, 0, 0, 1};
  Vec3 scale{1, 1, 1};
  std::optional<Mat4> matrix;

  friend bool operator==(const Node&, const Node&) = default;
};

// In-memory model of the supported glTF 2.0 subset. Geometry is held decoded;
// buffers, buffer views and accessors are regenerated by the writer.
// Materials, textures, images and samplers are carried as opaque JSON.
struct MeshDocument {
  std::string asset_version = "2.0";
  std::string generator;
  std::vector<Mesh> meshes;
  std::vector<Node> nodes;
  std::vector<int> scene_roots;
  bool has_scene = false;
  nlohmann::json materials = nlohmann::json::array();
  nlohmann::json textures = nlohmann::json::array();
  nlohmann::json images = nlohmann::json::array();
  nlohmann::json samplers = nlohmann::json::array();
  std::vector<std::string> extensions_used;
  // Non-fatal notes produced while parsing (unsupported extensions, dropped
  // non-float attributes). Not part of semantic equality.
  std::vector<std::string> parse_warnings;

};

bool semantically_equal(const MeshDocument& a, const MeshDocument& b);

struct AABB {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> max{0, 0, 0};

  bool contains(const AABB& inner, double slack = 0.0) const;
  friend bool operator==(const AABB&, const AABB&) = default;
};

struct Issue {
  std::string code;
  std::string message;
};

inline constexpr std::size_t kTriangleBudgetMin = 50'000;
inline constexpr std::size_t kTriangleBudgetMax = 100'000;
inline constexpr double kWeldTolerance = 1e-6;

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
  std::size_t triangle_count = 0;
  bool budget_ok = false;
  std::optional<AABB> bbox;
  bool watertight = false;

  bool ok() const { return errors.empty(); }
  bool has_error(std::string_view code) const;
  bool has_warning(std::string_view code) const;
};

enum class Container { kJson, kGlb };

// glTF / GLB I/O -----------------------------------------------------------

MeshDocument parse_gltf(ByteView bytes);
Bytes write_gltf(const MeshDocument& doc, Container container);

// Analysis -----------------------------------------------------------------

// One placement of a mesh in world space.
struct MeshInstance {
  int mesh = 0;
  std::array<double, 16> world{};  // column-major
};

// Meshes reachable from the scene roots (or every root node when there is no
// scene). A document without nodes places each mesh once at the origin.
std::vector<MeshInstance> mesh_instances(const MeshDocument& doc);

std::size_t triangle_count(const MeshDocument& doc);
AABB bounding_box(const MeshDocument& doc);
bool is_watertight(const MeshDocument& doc);
ValidationReport validate(const MeshDocument& doc);

struct DecimationResult {
  MeshDocument doc;
  double cell_size = 0.0;  // final grid cell edge length in model units
  int resolution = 0;      // cells along the longest bbox axis
  bool unchanged = false;
};

// Uniform vertex clustering: the grid over the local-space bounding box is
// coarsened by halving its resolution until the triangle count fits.
DecimationResult decimate_with_stats(const MeshDocument& doc, std::size_t target_triangles);
MeshDocument decimate(const MeshDocument& doc, std::size_t target_triangles);

// OBJ ------------------------------------------------------------------------

// `v` lines for welded world-space positions, then `f` lines (1-based).
Bytes export_obj(const MeshDocument& doc);

struct ObjModel {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;  // 0-based
};

ObjModel parse_obj(std::string_view text);

// Fixtures and procedural shapes ------------------------------------------------

MeshDocument single_mesh_document(Primitive prim, std::string name = "mesh");
Primitive unit_cube();
Primitive icosphere(int subdivisions, Vec3 center = {0, 0, 0}, float radius = 1.0f);
// Axis-aligned box whose faces are split into nx*ny, ny*nz, nx*nz quad grids
// (two triangles per quad). Triangle count: 4 * (nx*ny + ny*nz + nx*nz).
Primitive tessellated_box(Vec3 min, Vec3 max, int nx, int ny, int nz);

}  // namespace h3d
