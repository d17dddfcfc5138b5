#include <gtest/gtest.h>

#include <random>

#include "h3d/mesh.hpp"
#include "oracles.hpp"

using namespace h3d;
using h3d::testing::DocGen;

TEST(GltfRoundTrip, GeneratedDocumentsAreValid) {
  DocGen gen(2024);
  for (int i = 0; i < 200; ++i) {
    auto doc = gen.next();
    auto report = validate(doc);
    EXPECT_TRUE(report.ok()) << i << ": " << (report.errors.empty() ? "" : report.errors[0].code);
  }
}

TEST(GltfRoundTrip, ParseOfWriteIsIdentity) {
  DocGen gen(2024);
  int wide_index_docs = 0;
  for (int i = 0; i < 200; ++i) {
    auto doc = gen.next();
    bool wide = false;
    for (const auto& m : doc.meshes) {
      for (const auto& p : m.primitives) wide = wide || (p.indexed && p.positions.size() > 65'535);
    }
    wide_index_docs += wide;
    for (auto c : {Container::kJson, Container::kGlb}) {
      auto bytes = write_gltf(doc, c);
      auto back = parse_gltf(bytes);
      EXPECT_TRUE(semantically_equal(back, doc)) << "document " << i << (c == Container::kGlb ? " glb" : " json");
      EXPECT_EQ(write_gltf(doc, c), bytes) << "document " << i;
      EXPECT_EQ(write_gltf(back, c), bytes) << "document " << i;
    }
  }
  // The generator must reach the 32-bit index path.
  EXPECT_GT(wide_index_docs, 0);
}
