#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "h3d/error.hpp"
#include "h3d/gateway.hpp"
#include "h3d/mesh.hpp"

using namespace h3d;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInternal;
}

// A one-triangle glTF assembled byte by byte, independent of the writer.
std::string one_triangle_gltf(const std::string& version = "2.0") {
  float pos[9] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
  std::uint16_t idx[3] = {0, 1, 2};
  Bytes buf(44, 0);
  std::memcpy(buf.data(), pos, 36);
  std::memcpy(buf.data() + 36, idx, 6);
  auto uri = "data:application/octet-stream;base64," + base64_encode(buf);
  return R"({"asset":{"version":")" + version + R"("},
    "buffers":[{"byteLength":44,"uri":")" + uri + R"("}],
    "bufferViews":[{"buffer":0,"byteOffset":0,"byteLength":36},{"buffer":0,"byteOffset":36,"byteLength":6}],
    "accessors":[{"bufferView":0,"componentType":5126,"count":3,"type":"VEC3","min":[0,0,0],"max":[1,1,0]},
                 {"bufferView":1,"componentType":5123,"count":3,"type":"SCALAR"}],
    "meshes":[{"primitives":[{"attributes":{"POSITION":0},"indices":1}]}],
    "nodes":[{"mesh":0}],"scenes":[{"nodes":[0]}],"scene":0})";
}

MeshDocument cube_doc() { return single_mesh_document(unit_cube(), "cube"); }

Primitive triangle() {
  Primitive p;
  p.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  p.indices = {0, 1, 2};
  return p;
}

Primitive tetrahedron(Vec3 o) {
  Primitive p;
  p.positions = {o, {o[0] + 1, o[1], o[2]}, {o[0], o[1] + 1, o[2]}, {o[0], o[1], o[2] + 1}};
  p.indices = {0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3};
  return p;
}

std::uint32_t read_u32(const Bytes& b, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + at, 4);
  return v;
}

}  // namespace

TEST(ParseGltf, MinimalTriangle) {
  auto doc = parse_gltf(as_bytes(one_triangle_gltf()));
  EXPECT_EQ(triangle_count(doc), 1u);
  ASSERT_EQ(doc.meshes.size(), 1u);
  EXPECT_EQ(doc.meshes[0].primitives[0].positions[1], (Vec3{1, 0, 0}));
}

TEST(ParseGltf, RejectsOtherVersions) {
  EXPECT_EQ(code_of([] { parse_gltf(as_bytes(one_triangle_gltf("1.0"))); }), ErrorCode::kUnsupportedVersion);
}

TEST(ParseGltf, TruncatedInputIsMalformed) {
  auto text = one_triangle_gltf();
  EXPECT_EQ(code_of([&] { parse_gltf(as_bytes(std::string_view(text).substr(0, text.size() / 2))); }),
            ErrorCode::kMalformedAsset);
  auto glb = write_gltf(cube_doc(), Container::kGlb);
  Bytes cut(glb.begin(), glb.begin() + static_cast<long>(glb.size() - 7));
  EXPECT_EQ(code_of([&] { parse_gltf(cut); }), ErrorCode::kMalformedAsset);
  EXPECT_EQ(code_of([&] { parse_gltf(Bytes{}); }), ErrorCode::kMalformedAsset);
}

TEST(ParseGltf, AccessorOutOfRange) {
  auto text = one_triangle_gltf();
  auto pos = text.find("\"count\":3,\"type\":\"VEC3\"");
  text.replace(pos, 9, "\"count\":9");
  EXPECT_NE(code_of([&] { parse_gltf(as_bytes(text)); }), ErrorCode::kInternal);
}

TEST(ParseGltf, UnknownExtensionsBecomeWarnings) {
  auto text = one_triangle_gltf();
  text.insert(1, R"("extensionsUsed":["KHR_materials_unlit"],)");
  auto doc = parse_gltf(as_bytes(text));
  EXPECT_EQ(doc.extensions_used, std::vector<std::string>{"KHR_materials_unlit"});
  EXPECT_TRUE(validate(doc).has_warning("extension_used"));
}

TEST(WriteGltf, CubeRoundTripsBothContainers) {
  auto doc = cube_doc();
  for (auto c : {Container::kJson, Container::kGlb}) {
    auto bytes = write_gltf(doc, c);
    EXPECT_TRUE(semantically_equal(parse_gltf(bytes), doc));
    EXPECT_EQ(write_gltf(doc, c), bytes);
  }
}

TEST(WriteGltf, GlbContainerLayout) {
  auto glb = write_gltf(cube_doc(), Container::kGlb);
  ASSERT_GE(glb.size(), 28u);
  EXPECT_EQ(std::string(glb.begin(), glb.begin() + 4), "glTF");
  EXPECT_EQ(read_u32(glb, 4), 2u);
  EXPECT_EQ(read_u32(glb, 8), glb.size());
  auto json_len = read_u32(glb, 12);
  EXPECT_EQ(read_u32(glb, 16), 0x4E4F534Au);  // "JSON"
  EXPECT_EQ(json_len % 4, 0u);
  auto bin_at = 20 + json_len;
  EXPECT_EQ(read_u32(glb, bin_at + 4), 0x004E4942u);  // "BIN\0"
  EXPECT_EQ(read_u32(glb, bin_at) % 4, 0u);
  EXPECT_EQ(bin_at + 8 + read_u32(glb, bin_at), glb.size());
}

TEST(WriteGltf, DanglingIndexIsAnError) {
  auto doc = cube_doc();
  doc.meshes[0].primitives[0].indices[0] = 8;
  EXPECT_EQ(code_of([&] { write_gltf(doc, Container::kJson); }), ErrorCode::kInvalidDocument);
}

TEST(ExportObj, SingleTriangle) {
  auto obj = to_string(export_obj(single_mesh_document(triangle())));
  EXPECT_EQ(obj, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
}

TEST(ExportObj, CubeTopology) {
  auto obj = to_string(export_obj(cube_doc()));
  auto count = [&](std::string_view prefix) {
    std::size_t n = 0, pos = 0;
    while ((pos = obj.find(prefix, pos)) != std::string::npos) {
      if (pos == 0 || obj[pos - 1] == '\n') ++n;
      pos += prefix.size();
    }
    return n;
  };
  EXPECT_EQ(count("v "), 8u);
  EXPECT_EQ(count("f "), 12u);
  auto parsed = parse_obj(obj);
  EXPECT_EQ(parsed.vertices.size(), 8u);
  EXPECT_EQ(parsed.faces.size(), 12u);
}

TEST(ExportObj, AppliesNodeTransform) {
  auto doc = single_mesh_document(triangle());
  doc.nodes[0].translation = {1, 0, 0};
  auto obj = to_string(export_obj(doc));
  EXPECT_EQ(obj.substr(0, obj.find('\n')), "v 1 0 0");
}

TEST(ExportObj, WeldsDuplicatedCorners) {
  // Same cube, every triangle with its own three vertices.
  auto cube = unit_cube();
  Primitive soup;
  for (auto i : cube.indices) {
    soup.indices.push_back(static_cast<std::uint32_t>(soup.positions.size()));
    soup.positions.push_back(cube.positions[i]);
  }
  auto parsed = parse_obj(to_string(export_obj(single_mesh_document(soup))));
  EXPECT_EQ(parsed.vertices.size(), 8u);
  for (const auto& f : parsed.faces) {
    for (auto i : f) EXPECT_LT(i, parsed.vertices.size());
  }
}

TEST(TriangleCount, Examples) {
  EXPECT_EQ(triangle_count(cube_doc()), 12u);
  EXPECT_EQ(triangle_count(single_mesh_document(icosphere(1))), 80u);
  EXPECT_EQ(triangle_count(MeshDocument{}), 0u);
}

TEST(TriangleCount, IcosphereClosedForm) {
  std::size_t expected = 20;
  for (int s = 0; s <= 4; ++s, expected *= 4) {
    auto doc = single_mesh_document(icosphere(s));
    EXPECT_EQ(triangle_count(doc), expected) << s;
    EXPECT_TRUE(is_watertight(doc)) << s;
  }
}

TEST(BoundingBox, Examples) {
  auto box = bounding_box(cube_doc());
  EXPECT_EQ(box.min, (std::array<double, 3>{0, 0, 0}));
  EXPECT_EQ(box.max, (std::array<double, 3>{1, 1, 1}));

  Primitive point;
  point.positions = {{2, 3, 4}};
  box = bounding_box(single_mesh_document(point));
  EXPECT_EQ(box.min, (std::array<double, 3>{2, 3, 4}));
  EXPECT_EQ(box.max, box.min);

  auto moved = cube_doc();
  moved.nodes[0].translation = {5, 0, 0};
  box = bounding_box(moved);
  EXPECT_EQ(box.min, (std::array<double, 3>{5, 0, 0}));
  EXPECT_EQ(box.max, (std::array<double, 3>{6, 1, 1}));

  EXPECT_EQ(code_of([] { bounding_box(MeshDocument{}); }), ErrorCode::kNoVertices);
}

TEST(BoundingBox, NestedNodeTransforms) {
  auto doc = cube_doc();
  Node parent;
  parent.name = "parent";
  parent.children = {0};
  parent.scale = {2, 2, 2};
  parent.translation = {0, 0, 10};
  doc.nodes.push_back(parent);
  doc.scene_roots = {1};
  auto box = bounding_box(doc);
  EXPECT_EQ(box.min, (std::array<double, 3>{0, 0, 10}));
  EXPECT_EQ(box.max, (std::array<double, 3>{2, 2, 12}));
}

TEST(Watertight, Examples) {
  EXPECT_TRUE(is_watertight(cube_doc()));
  auto open = unit_cube();
  open.indices.resize(30);
  EXPECT_FALSE(is_watertight(single_mesh_document(open)));

  auto a = tetrahedron({0, 0, 0});
  auto b = tetrahedron({5, 5, 5});
  for (auto i : b.indices) a.indices.push_back(i + 4);
  a.positions.insert(a.positions.end(), b.positions.begin(), b.positions.end());
  EXPECT_TRUE(is_watertight(single_mesh_document(a)));

  EXPECT_FALSE(is_watertight(MeshDocument{}));
}

TEST(Watertight, InvariantUnderPermutation) {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    bool closed = trial % 2 == 0;
    auto prim = trial % 4 < 2 ? unit_cube() : icosphere(1);
    if (!closed) prim.indices.resize(prim.indices.size() - 3);
    std::vector<std::array<std::uint32_t, 3>> tris;
    for (std::size_t i = 0; i < prim.indices.size(); i += 3) {
      tris.push_back({prim.indices[i], prim.indices[i + 1], prim.indices[i + 2]});
    }
    std::shuffle(tris.begin(), tris.end(), rng);
    for (auto& t : tris) std::shuffle(t.begin(), t.end(), rng);
    prim.indices.clear();
    for (const auto& t : tris) prim.indices.insert(prim.indices.end(), t.begin(), t.end());
    EXPECT_EQ(is_watertight(single_mesh_document(prim)), closed);
  }
}

TEST(Watertight, WeldsWithinTolerance) {
  auto cube = unit_cube();
  Primitive soup;
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> wiggle(-2e-7f, 2e-7f);
  for (auto i : cube.indices) {
    soup.indices.push_back(static_cast<std::uint32_t>(soup.positions.size()));
    auto p = cube.positions[i];
    for (auto& c : p) c += wiggle(rng);
    soup.positions.push_back(p);
  }
  EXPECT_TRUE(is_watertight(single_mesh_document(soup)));
}

TEST(Validate, UnitCube) {
  auto r = validate(cube_doc());
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.triangle_count, 12u);
  EXPECT_FALSE(r.budget_ok);
  EXPECT_TRUE(r.has_warning("triangle_budget"));
  EXPECT_TRUE(r.watertight);
  ASSERT_TRUE(r.bbox);
}

TEST(Validate, IndexEqualToVertexCount) {
  auto doc = cube_doc();
  doc.meshes[0].primitives[0].indices[5] = 8;
  auto r = validate(doc);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].code, "index_out_of_range");
}

TEST(Validate, StructuralErrors) {
  auto doc = cube_doc();
  doc.asset_version = "1.0";
  EXPECT_TRUE(validate(doc).has_error("unsupported_version"));

  doc = cube_doc();
  doc.meshes[0].primitives[0].indices.pop_back();
  EXPECT_TRUE(validate(doc).has_error("bad_index_count"));

  doc = cube_doc();
  doc.meshes[0].primitives[0].mode = 1;
  EXPECT_TRUE(validate(doc).has_error("unsupported_mode"));

  doc = cube_doc();
  doc.meshes[0].primitives[0].positions[0][1] = std::nanf("");
  EXPECT_TRUE(validate(doc).has_error("non_finite_position"));

  doc = cube_doc();
  doc.meshes[0].primitives[0].attributes["NORMAL"] = FloatAttribute{3, {0, 0, 1}};
  EXPECT_TRUE(validate(doc).has_error("attribute_count_mismatch"));

  doc = cube_doc();
  doc.nodes[0].mesh = 3;
  EXPECT_TRUE(validate(doc).has_error("node_mesh_out_of_range"));

  doc = cube_doc();
  doc.nodes[0].children = {0};
  EXPECT_TRUE(validate(doc).has_error("node_hierarchy"));

  doc = cube_doc();
  doc.scene_roots = {4};
  EXPECT_TRUE(validate(doc).has_error("scene_root_out_of_range"));

  doc = cube_doc();
  doc.meshes[0].primitives[0].material = 0;
  EXPECT_TRUE(validate(doc).has_error("material_out_of_range"));
}

TEST(Validate, MockBuildingLandsInBudget) {
  MockMeshParams params;
  auto doc = build_mock_mesh("seed", params);
  auto r = validate(doc);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.triangle_count, 60'000u);
  EXPECT_EQ(params.expected_triangles(), 60'000u);
  EXPECT_TRUE(r.budget_ok);
}

TEST(TessellatedBox, CountAndClosure) {
  auto doc = single_mesh_document(tessellated_box({0, 0, 0}, {2, 3, 4}, 3, 4, 5));
  EXPECT_EQ(triangle_count(doc), 4u * (3 * 4 + 4 * 5 + 3 * 5));
  EXPECT_TRUE(is_watertight(doc));
  auto box = bounding_box(doc);
  EXPECT_EQ(box.max, (std::array<double, 3>{2, 3, 4}));
}

TEST(Decimate, OneCellCollapsesTheCube) {
  auto result = decimate_with_stats(cube_doc(), 1);
  EXPECT_EQ(triangle_count(result.doc), 0u);
  EXPECT_EQ(result.resolution, 1);
}

TEST(Decimate, IcosphereToBudget) {
  auto src = single_mesh_document(icosphere(3));
  ASSERT_EQ(triangle_count(src), 1280u);
  auto result = decimate_with_stats(src, 400);
  EXPECT_LE(triangle_count(result.doc), 400u);
  EXPECT_TRUE(validate(result.doc).ok());
  EXPECT_TRUE(bounding_box(src).contains(bounding_box(result.doc), result.cell_size));
}

TEST(Decimate, UnderTargetIsUnchanged) {
  auto doc = cube_doc();
  auto result = decimate_with_stats(doc, 12);
  EXPECT_TRUE(result.unchanged);
  EXPECT_TRUE(semantically_equal(result.doc, doc));
}

TEST(Decimate, RejectsZeroTarget) {
  EXPECT_EQ(code_of([] { decimate(cube_doc(), 0); }), ErrorCode::kInvalidArgument);
}

TEST(Decimate, BoundsProperty) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<float> coord(-5, 5);
  for (int trial = 0; trial < 60; ++trial) {
    Primitive prim = trial % 2 ? icosphere(static_cast<int>(rng() % 4), {coord(rng), coord(rng), coord(rng)},
                                           1.0f + static_cast<float>(rng() % 5))
                               : tessellated_box({0, 0, 0}, {1 + coord(rng) * coord(rng), 2, 3},
                                                 1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8),
                                                 1 + static_cast<int>(rng() % 8));
    auto src = single_mesh_document(prim);
    auto before = triangle_count(src);
    std::size_t target = 1 + rng() % (before + 10);
    auto result = decimate_with_stats(src, target);
    auto after = triangle_count(result.doc);
    EXPECT_LE(after, target);
    EXPECT_LE(after, before);
    EXPECT_TRUE(validate(result.doc).ok());
    if (after > 0) {
      double diag = result.cell_size * std::sqrt(3.0);
      EXPECT_TRUE(bounding_box(src).contains(bounding_box(result.doc), diag));
    }
  }
}
