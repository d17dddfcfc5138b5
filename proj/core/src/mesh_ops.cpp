#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "h3d/error.hpp"
#include "h3d/mesh.hpp"

namespace h3d {
namespace {

using Mat = std::array<double, 16>;
using Point = std::array<double, 3>;

constexpr Mat kIdentity{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

Mat multiply(const Mat& a, const Mat& b) {
  Mat r{};
  for (int c = 0; c < 4; ++c) {
    for (int row = 0; row < 4; ++row) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += a[k * 4 + row] * b[c * 4 + k];
      r[c * 4 + row] = s;
    }
  }
  return r;
}

Mat local_matrix(const Node& n) {
  if (n.matrix) {
    Mat m{};
    for (int i = 0; i < 16; ++i) m[i] = (*n.matrix)[i];
    return m;
  }
  double x = n.rotation[0], y = n.rotation[1], z = n.rotation[2], w = n.rotation[3];
  double sx = n.scale[0], sy = n.scale[1], sz = n.scale[2];
  // T * R * S, column-major.
  Mat m{};
  m[0] = (1 - 2 * (y * y + z * z)) * sx;
  m[1] = (2 * (x * y + z * w)) * sx;
  m[2] = (2 * (x * z - y * w)) * sx;
  m[4] = (2 * (x * y - z * w)) * sy;
  m[5] = (1 - 2 * (x * x + z * z)) * sy;
  m[6] = (2 * (y * z + x * w)) * sy;
  m[8] = (2 * (x * z + y * w)) * sz;
  m[9] = (2 * (y * z - x * w)) * sz;
  m[10] = (1 - 2 * (x * x + y * y)) * sz;
  m[12] = n.translation[0];
  m[13] = n.translation[1];
  m[14] = n.translation[2];
  m[15] = 1;
  return m;
}

Point transform(const Mat& m, const Vec3& p) {
  return {m[0] * p[0] + m[4] * p[1] + m[8] * p[2] + m[12],
          m[1] * p[0] + m[5] * p[1] + m[9] * p[2] + m[13],
          m[2] * p[0] + m[6] * p[1] + m[10] * p[2] + m[14]};
}

std::size_t primitive_triangles(const Primitive& p) {
  if (p.mode != kModeTriangles) return 0;
  return (p.indexed ? p.indices.size() : p.positions.size()) / 3;
}

template <class F>
void for_each_triangle(const Primitive& p, F&& f) {
  if (p.mode != kModeTriangles) return;
  auto n = primitive_triangles(p);
  for (std::size_t t = 0; t < n; ++t) {
    if (p.indexed) {
      f(p.indices[3 * t], p.indices[3 * t + 1], p.indices[3 * t + 2]);
    } else {
      f(static_cast<std::uint32_t>(3 * t), static_cast<std::uint32_t>(3 * t + 1),
        static_cast<std::uint32_t>(3 * t + 2));
    }
  }
}

// Merges points closer than the tolerance (Euclidean) into the first point
// seen, using a hash grid. Each grid bucket is a
// singly linked list threaded through next_.
class Welder {
 public:
  explicit Welder(double tolerance, std::size_t expected = 0) : tol_(tolerance) {
    points_.reserve(expected);
    next_.reserve(expected);
    heads_.reserve(expected);
  }

  std::uint32_t add(const Point& p) {
    // Cells are two tolerances wide, so a match can only sit in this cell or
    // in the neighbour across the nearer face on each axis: 8 cells at most.
    const double w = 2 * tol_;
    std::array<std::int64_t, 3> cell, step;
    for (int k = 0; k < 3; ++k) {
      double q = p[k] / w;
      cell[k] = static_cast<std::int64_t>(std::floor(q));
      step[k] = q - static_cast<double>(cell[k]) < 0.5 ? -1 : 1;
    }
    for (int mask = 0; mask < 8; ++mask) {
      auto it = heads_.find(key({cell[0] + ((mask & 1) ? step[0] : 0), cell[1] + ((mask & 2) ? step[1] : 0),
                                 cell[2] + ((mask & 4) ? step[2] : 0)}));
      if (it == heads_.end()) continue;
      for (auto idx = it->second; idx != kNone; idx = next_[idx]) {
        const auto& q = points_[idx];
        double d2 = 0;
        for (int k = 0; k < 3; ++k) d2 += (p[k] - q[k]) * (p[k] - q[k]);
        if (d2 <= tol_ * tol_) return idx;
      }
    }
    auto idx = static_cast<std::uint32_t>(points_.size());
    points_.push_back(p);
    auto [it, inserted] = heads_.try_emplace(key(cell), idx);
    next_.push_back(inserted ? kNone : it->second);
    it->second = idx;
    return idx;
  }

  const std::vector<Point>& points() const { return points_; }

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }

  double tol_;
  std::vector<Point> points_;
  std::vector<std::uint32_t> next_;
  std::unordered_map<std::uint64_t, std::uint32_t> heads_;
};

struct WeldedSoup {
  std::vector<Point> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;  // degenerate ones removed
};

// With `all_vertices` false, vertices no triangle references are skipped.
WeldedSoup welded_world_triangles(const MeshDocument& doc, bool all_vertices) {
  constexpr std::uint32_t kUnset = 0xFFFFFFFFu;
  auto instances = mesh_instances(doc);
  std::size_t expected = 0;
  for (const auto& inst : instances) {
    for (const auto& prim : doc.meshes[inst.mesh].primitives) expected += prim.positions.size();
  }
  Welder welder(kWeldTolerance, expected);
  WeldedSoup soup;
  for (const auto& inst : instances) {
    for (const auto& prim : doc.meshes[inst.mesh].primitives) {
      std::vector<std::uint32_t> remap(prim.positions.size(), kUnset);
      auto welded = [&](std::uint32_t i) {
        if (remap[i] == kUnset) remap[i] = welder.add(transform(inst.world, prim.positions[i]));
        return remap[i];
      };
      if (all_vertices) {
        for (std::uint32_t i = 0; i < prim.positions.size(); ++i) welded(i);
      }
      for_each_triangle(prim, [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        auto wa = welded(a), wb = welded(b), wc = welded(c);
        if (wa == wb || wb == wc || wa == wc) return;
        soup.triangles.push_back({wa, wb, wc});
      });
    }
  }
  soup.vertices = welder.points();
  return soup;
}

void collect_instances(const MeshDocument& doc, int node, const Mat& parent, std::vector<bool>& visiting,
                       std::vector<MeshInstance>& out) {
  if (node < 0 || static_cast<std::size_t>(node) >= doc.nodes.size() || visiting[node]) return;
  visiting[node] = true;
  const auto& n = doc.nodes[node];
  auto world = multiply(parent, local_matrix(n));
  if (n.mesh && *n.mesh >= 0 && static_cast<std::size_t>(*n.mesh) < doc.meshes.size()) {
    out.push_back({*n.mesh, world});
  }
  for (int child : n.children) collect_instances(doc, child, world, visiting, out);
  visiting[node] = false;
}

std::vector<int> root_nodes(const MeshDocument& doc) {
  if (doc.has_scene) return doc.scene_roots;
  std::vector<bool> is_child(doc.nodes.size(), false);
  for (const auto& n : doc.nodes) {
    for (int c : n.children) {
      if (c >= 0 && static_cast<std::size_t>(c) < doc.nodes.size()) is_child[c] = true;
    }
  }
  std::vector<int> roots;
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    if (!is_child[i]) roots.push_back(static_cast<int>(i));
  }
  return roots;
}

std::string format_float(double v) {
  float f = static_cast<float>(v);
  if (f == 0.0f) f = 0.0f;  // drop the sign of negative zero
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), f);
  return std::string(buf, end);
}

}  // namespace

bool AABB::contains(const AABB& inner, double slack) const {
  for (int k = 0; k < 3; ++k) {
    if (inner.min[k] < min[k] - slack || inner.max[k] > max[k] + slack) return false;
  }
  return true;
}

bool ValidationReport::has_error(std::string_view code) const {
  return std::any_of(errors.begin(), errors.end(), [&](const Issue& i) { return i.code == code; });
}

bool ValidationReport::has_warning(std::string_view code) const {
  return std::any_of(warnings.begin(), warnings.end(), [&](const Issue& i) { return i.code == code; });
}

std::vector<MeshInstance> mesh_instances(const MeshDocument& doc) {
  std::vector<MeshInstance> out;
  if (doc.nodes.empty()) {
    for (std::size_t i = 0; i < doc.meshes.size(); ++i) out.push_back({static_cast<int>(i), kIdentity});
    return out;
  }
  std::vector<bool> visiting(doc.nodes.size(), false);
  for (int root : root_nodes(doc)) collect_instances(doc, root, kIdentity, visiting, out);
  return out;
}

std::size_t triangle_count(const MeshDocument& doc) {
  std::size_t n = 0;
  for (const auto& mesh : doc.meshes) {
    for (const auto& prim : mesh.primitives) n += primitive_triangles(prim);
  }
  return n;
}

AABB bounding_box(const MeshDocument& doc) {
  AABB box;
  bool any = false;
  for (const auto& inst : mesh_instances(doc)) {
    for (const auto& prim : doc.meshes[inst.mesh].primitives) {
      for (const auto& p : prim.positions) {
        auto w = transform(inst.world, p);
        for (int k = 0; k < 3; ++k) {
          if (!any || w[k] < box.min[k]) box.min[k] = w[k];
          if (!any || w[k] > box.max[k]) box.max[k] = w[k];
        }
        any = true;
      }
    }
  }
  if (!any) throw Error(ErrorCode::kNoVertices, "document has no vertices");
  return box;
}

bool is_watertight(const MeshDocument& doc) {
  auto soup = welded_world_triangles(doc, false);
  if (soup.triangles.empty()) return false;
  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(soup.triangles.size() * 3);
  for (const auto& t : soup.triangles) {
    for (int e = 0; e < 3; ++e) {
      std::uint64_t a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[(a << 32) | b];
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& kv) { return kv.second == 2; });
}

ValidationReport validate(const MeshDocument& doc) {
  ValidationReport r;
  auto error = [&](std::string code, std::string msg) { r.errors.push_back({std::move(code), std::move(msg)}); };
  auto warn = [&](std::string code, std::string msg) { r.warnings.push_back({std::move(code), std::move(msg)}); };

  if (doc.asset_version != "2.0") {
    error("unsupported_version", "asset version '" + doc.asset_version + "' is not 2.0");
  }
  std::size_t vertex_total = 0;
  for (std::size_t mi = 0; mi < doc.meshes.size(); ++mi) {
    const auto& mesh = doc.meshes[mi];
    if (mesh.primitives.empty()) warn("empty_mesh", "mesh " + std::to_string(mi) + " has no primitives");
    for (std::size_t pi = 0; pi < mesh.primitives.size(); ++pi) {
      const auto& p = mesh.primitives[pi];
      auto where = "mesh " + std::to_string(mi) + " primitive " + std::to_string(pi);
      vertex_total += p.positions.size();
      if (p.mode != kModeTriangles) {
        error("unsupported_mode", where + " uses mode " + std::to_string(p.mode) + "; only triangles are supported");
      }
      for (const auto& pos : p.positions) {
        if (!std::isfinite(pos[0]) || !std::isfinite(pos[1]) || !std::isfinite(pos[2])) {
          error("non_finite_position", where + " has a non-finite vertex position");
          break;
        }
      }
      for (const auto& [name, attr] : p.attributes) {
        if (attr.components < 1 || attr.components > 4 || attr.values.size() % attr.components != 0) {
          error("bad_accessor_shape", where + " attribute " + name + " has an invalid component layout");
        } else if (attr.count() != p.positions.size()) {
          error("attribute_count_mismatch", where + " attribute " + name + " count differs from POSITION");
        }
      }
      if (p.indexed) {
        if (p.indices.size() % 3 != 0) {
          error("bad_index_count", where + " index count " + std::to_string(p.indices.size()) +
                                       " is not divisible by 3");
        }
        for (auto idx : p.indices) {
          if (idx >= p.positions.size()) {
            error("index_out_of_range", where + " index " + std::to_string(idx) + " >= vertex count " +
                                            std::to_string(p.positions.size()));
            break;
          }
        }
      } else if (p.positions.size() % 3 != 0) {
        error("bad_index_count", where + " non-indexed vertex count is not divisible by 3");
      }
      if (p.material && (*p.material < 0 || static_cast<std::size_t>(*p.material) >= doc.materials.size())) {
        error("material_out_of_range", where + " references missing material " + std::to_string(*p.material));
      }
    }
  }

  std::vector<int> parent_count(doc.nodes.size(), 0);
  for (std::size_t ni = 0; ni < doc.nodes.size(); ++ni) {
    const auto& n = doc.nodes[ni];
    if (n.mesh && (*n.mesh < 0 || static_cast<std::size_t>(*n.mesh) >= doc.meshes.size())) {
      error("node_mesh_out_of_range", "node " + std::to_string(ni) + " references missing mesh " +
                                          std::to_string(*n.mesh));
    }
    for (int c : n.children) {
      if (c < 0 || static_cast<std::size_t>(c) >= doc.nodes.size()) {
        error("node_child_out_of_range", "node " + std::to_string(ni) + " has missing child " + std::to_string(c));
      } else if (static_cast<std::size_t>(c) == ni || ++parent_count[c] > 1) {
        error("node_hierarchy", "node " + std::to_string(c) + " has more than one parent or is its own child");
      }
    }
  }
  if (!doc.nodes.empty() && r.errors.empty()) {
    // Every node must be reachable from a parentless node; otherwise there is a cycle.
    std::vector<bool> seen(doc.nodes.size(), false);
    std::function<void(int)> visit = [&](int i) {
      if (seen[i]) return;
      seen[i] = true;
      for (int c : doc.nodes[i].children) visit(c);
    };
    for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
      if (parent_count[i] == 0) visit(static_cast<int>(i));
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      error("node_hierarchy", "node hierarchy contains a cycle");
    }
  }
  for (int root : doc.scene_roots) {
    if (root < 0 || static_cast<std::size_t>(root) >= doc.nodes.size()) {
      error("scene_root_out_of_range", "scene references missing node " + std::to_string(root));
    }
  }

  for (const auto& ext : doc.extensions_used) warn("extension_used", "extension '" + ext + "' is not interpreted");

  r.triangle_count = triangle_count(doc);
  r.budget_ok = r.triangle_count >= kTriangleBudgetMin && r.triangle_count <= kTriangleBudgetMax;
  if (!r.budget_ok) {
    warn("triangle_budget", std::to_string(r.triangle_count) + " triangles outside the " +
                                std::to_string(kTriangleBudgetMin) + "-" + std::to_string(kTriangleBudgetMax) +
                                " budget");
  }
  if (r.errors.empty()) {
    // Vertices may exist yet be unreachable from the scene.
    if (vertex_total > 0) {
      try {
        r.bbox = bounding_box(doc);
      } catch (const Error&) {
      }
    }
    if (!r.bbox) warn("no_vertices", "no vertices are placed in the scene");
    r.watertight = is_watertight(doc);
    if (!r.watertight) warn("not_watertight", "some edges are not shared by exactly two triangles");
  }
  return r;
}

DecimationResult decimate_with_stats(const MeshDocument& doc, std::size_t target) {
  if (target < 1) throw Error(ErrorCode::kInvalidArgument, "decimation target must be at least 1");
  auto report = validate(doc);
  if (!report.ok()) {
    throw Error(ErrorCode::kInvalidDocument, "cannot decimate invalid document: " + report.errors.front().message);
  }
  if (report.triangle_count <= target) return {doc, 0.0, 0, true};

  Point lo{0, 0, 0}, hi{0, 0, 0};
  bool any = false;
  for (const auto& mesh : doc.meshes) {
    for (const auto& prim : mesh.primitives) {
      for (const auto& p : prim.positions) {
        for (int k = 0; k < 3; ++k) {
          if (!any || p[k] < lo[k]) lo[k] = p[k];
          if (!any || p[k] > hi[k]) hi[k] = p[k];
        }
        any = true;
      }
    }
  }
  double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});

  auto cluster_with = [&](double cell) {
    MeshDocument out = doc;
    std::array<std::int64_t, 3> cells{1, 1, 1};
    for (int k = 0; k < 3; ++k) {
      if (cell > 0) cells[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((hi[k] - lo[k]) / cell)));
    }
    auto cell_of = [&](const Vec3& p) {
      std::array<std::int64_t, 3> c{0, 0, 0};
      if (cell > 0) {
        for (int k = 0; k < 3; ++k) {
          c[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p[k] - lo[k]) / cell)), 0,
                                          cells[k] - 1);
        }
      }
      return (c[2] * cells[1] + c[1]) * cells[0] + c[0];
    };
    for (auto& mesh : out.meshes) {
      std::vector<Primitive> kept;
      for (auto& prim : mesh.primitives) {
        std::unordered_map<std::int64_t, std::uint32_t> cluster_of_cell;
        std::vector<std::uint32_t> cluster(prim.positions.size());
        std::vector<std::size_t> members;
        std::vector<std::array<double, 3>> sums;
        std::map<std::string, std::vector<double>> attr_sums;
        for (std::size_t i = 0; i < prim.positions.size(); ++i) {
          auto [it, inserted] =
              cluster_of_cell.try_emplace(cell_of(prim.positions[i]), static_cast<std::uint32_t>(sums.size()));
          if (inserted) {
            sums.push_back({0, 0, 0});
            members.push_back(0);
          }
          auto c = it->second;
          cluster[i] = c;
          for (int k = 0; k < 3; ++k) sums[c][k] += prim.positions[i][k];
          ++members[c];
        }
        Primitive next;
        next.mode = prim.mode;
        next.material = prim.material;
        next.indexed = true;
        next.positions.resize(sums.size());
        for (std::size_t c = 0; c < sums.size(); ++c) {
          for (int k = 0; k < 3; ++k) {
            next.positions[c][k] = static_cast<float>(sums[c][k] / static_cast<double>(members[c]));
          }
        }
        for (const auto& [name, attr] : prim.attributes) {
          std::vector<double> acc(sums.size() * attr.components, 0.0);
          for (std::size_t i = 0; i < prim.positions.size(); ++i) {
            for (int k = 0; k < attr.components; ++k) acc[cluster[i] * attr.components + k] += attr.values[i * attr.components + k];
          }
          FloatAttribute averaged{attr.components, std::vector<float>(acc.size())};
          for (std::size_t c = 0; c < sums.size(); ++c) {
            for (int k = 0; k < attr.components; ++k) {
              averaged.values[c * attr.components + k] =
                  static_cast<float>(acc[c * attr.components + k] / static_cast<double>(members[c]));
            }
          }
          next.attributes[name] = std::move(averaged);
        }
        for_each_triangle(prim, [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
          auto ca = cluster[a], cb = cluster[b], cc = cluster[c];
          if (ca == cb || cb == cc || ca == cc) return;
          next.indices.insert(next.indices.end(), {ca, cb, cc});
        });
        if (!next.indices.empty()) kept.push_back(std::move(next));
      }
      mesh.primitives = std::move(kept);
    }
    return out;
  };

  // Halve the grid until the target is met, then bisect between the last
  // failing and first passing resolution to keep as much detail as allowed.
  int resolution = 1024;
  auto out = cluster_with(extent / resolution);
  while (triangle_count(out) > target && resolution > 1) {
    resolution /= 2;
    out = cluster_with(extent / resolution);
  }
  if (resolution < 1024 && triangle_count(out) <= target) {
    int good = resolution, bad = resolution * 2;
    while (bad - good > 1) {
      int mid = good + (bad - good) / 2;
      auto trial = cluster_with(extent / mid);
      if (triangle_count(trial) <= target) {
        good = mid;
        out = std::move(trial);
      } else {
        bad = mid;
      }
    }
    resolution = good;
  }
  return {std::move(out), extent / resolution, resolution, false};
}

MeshDocument decimate(const MeshDocument& doc, std::size_t target_triangles) {
  return decimate_with_stats(doc, target_triangles).doc;
}

Bytes export_obj(const MeshDocument& doc) {
  auto report = validate(doc);
  if (!report.ok()) {
    throw Error(ErrorCode::kInvalidDocument, "cannot export invalid document: " + report.errors.front().message);
  }
  auto soup = welded_world_triangles(doc, true);
  std::string out;
  out.reserve(soup.vertices.size() * 32 + soup.triangles.size() * 24);
  for (const auto& v : soup.vertices) {
    out += "v ";
    out += format_float(v[0]);
    out += ' ';
    out += format_float(v[1]);
    out += ' ';
    out += format_float(v[2]);
    out += '\n';
  }
  for (const auto& t : soup.triangles) {
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
  }
  return to_bytes(out);
}

ObjModel parse_obj(std::string_view text) {
  ObjModel m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kMalformedAsset, "OBJ line " + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream in(line);
    std::string tag;
    if (!(in >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::array<double, 3> v{};
      if (!(in >> v[0] >> v[1] >> v[2])) fail("vertex needs three coordinates");
      m.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string ref;
      while (in >> ref) {
        long long i = 0;
        auto slash = ref.find('/');
        auto head = ref.substr(0, slash);
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), i);
        if (ec != std::errc() || p != head.data() + head.size() || i == 0) fail("bad face index '" + ref + "'");
        long long resolved = i > 0 ? i - 1 : static_cast<long long>(m.vertices.size()) + i;
        if (resolved < 0 || resolved >= static_cast<long long>(m.vertices.size())) {
          fail("face index " + std::to_string(i) + " out of range");
        }
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) fail("face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) m.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return m;
}

MeshDocument single_mesh_document(Primitive prim, std::string name) {
  MeshDocument doc;
  doc.generator = "heritage3d";
  doc.meshes.push_back(Mesh{name, {std::move(prim)}});
  doc.nodes.push_back(Node{name, 0, {}, {0, 0, 0}, {0, 0, 0, 1}, {1, 1, 1}, std::nullopt});
  doc.has_scene = true;
  doc.scene_roots = {0};
  return doc;
}

Primitive unit_cube() {
  Primitive p;
  p.positions = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  p.indices = {0, 2, 1, 0, 3, 2,   // z = 0
               4, 5, 6, 4, 6, 7,   // z = 1
               0, 1, 5, 0, 5, 4,   // y = 0
               3, 7, 6, 3, 6, 2,   // y = 1
               0, 4, 7, 0, 7, 3,   // x = 0
               1, 2, 6, 1, 6, 5};  // x = 1
  return p;
}

Primitive icosphere(int subdivisions, Vec3 center, float radius) {
  if (subdivisions < 0 || subdivisions > 8) {
    throw Error(ErrorCode::kInvalidArgument, "icosphere subdivisions must be in [0, 8]");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Point> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  auto normalize = [](Point p) {
    double len = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    return Point{p[0] / len, p[1] / len, p[2] / len};
  };
  for (auto& v : verts) v = normalize(v);
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5}, {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::unordered_map<std::uint64_t, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      std::uint64_t key = (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const auto& pa = verts[a];
      const auto& pb = verts[b];
      verts.push_back(normalize({(pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2, (pa[2] + pb[2]) / 2}));
      auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      auto ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  Primitive p;
  p.positions.reserve(verts.size());
  for (const auto& v : verts) {
    p.positions.push_back({static_cast<float>(center[0] + radius * v[0]), static_cast<float>(center[1] + radius * v[1]),
                           static_cast<float>(center[2] + radius * v[2])});
  }
  p.indices.reserve(faces.size() * 3);
  for (const auto& f : faces) p.indices.insert(p.indices.end(), f.begin(), f.end());
  return p;
}

Primitive tessellated_box(Vec3 min, Vec3 max, int nx, int ny, int nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorCode::kInvalidArgument, "box grid counts must be >= 1");
  std::array<std::vector<float>, 3> coords;
  std::array<int, 3> n{nx, ny, nz};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i <= n[k]; ++i) {
      coords[k].push_back(i == n[k] ? max[k]
                                    : static_cast<float>(min[k] + (static_cast<double>(max[k]) - min[k]) * i / n[k]));
    }
  }
  Primitive p;
  // One face per (fixed axis, side). u and v are the in-plane axes, ordered so
  // the winding faces outward.
  auto face = [&](int axis, bool high, int u, int v) {
    auto base = static_cast<std::uint32_t>(p.positions.size());
    for (int j = 0; j <= n[v]; ++j) {
      for (int i = 0; i <= n[u]; ++i) {
        Vec3 pos{};
        pos[axis] = high ? max[axis] : min[axis];
        pos[u] = coords[u][i];
        pos[v] = coords[v][j];
        p.positions.push_back(pos);
      }
    }
    auto at = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (n[u] + 1) + i); };
    for (int j = 0; j < n[v]; ++j) {
      for (int i = 0; i < n[u]; ++i) {
        std::uint32_t a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), d = at(i, j + 1);
        if (high) {
          p.indices.insert(p.indices.end(), {a, b, c, a, c, d});
        } else {
          p.indices.insert(p.indices.end(), {a, c, b, a, d, c});
        }
      }
    }
  };
  face(0, false, 1, 2);
  face(0, true, 1, 2);
  face(1, false, 2, 0);
  face(1, true, 2, 0);
  face(2, false, 0, 1);
  face(2, true, 0, 1);
  return p;
}

}  // namespace h3d
