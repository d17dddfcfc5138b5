#include "h3d/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdlib>
#include <sstream>

#include "h3d/config.hpp"
#include "h3d/error.hpp"
#include "h3d/image_info.hpp"

namespace h3d {

std::string_view backend_kind_name(BackendKind k) noexcept {
  return k == BackendKind::kImageSynthesis ? "image_synthesis" : "mesh_generation";
}

std::string_view adapter_kind_name(AdapterKind k) noexcept {
  return k == AdapterKind::kRemoteHttp ? "remote_http" : "mock";
}

void RetryPolicy::check() const {
  if (max_attempts < 1) throw Error(ErrorCode::kInvalidProfile, "retry max_attempts must be >= 1");
  if (!(backoff_factor >= 1.0)) throw Error(ErrorCode::kInvalidProfile, "retry backoff_factor must be >= 1");
  if (!(jitter_fraction >= 0.0 && jitter_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidProfile, "retry jitter_fraction must be in [0, 1]");
  }
  if (base_delay.count() < 0) throw Error(ErrorCode::kInvalidProfile, "retry base_delay must be >= 0");
}

std::chrono::nanoseconds RetryPolicy::nominal_delay(int n) const {
  double ns = static_cast<double>(std::chrono::nanoseconds(base_delay).count()) *
              std::pow(backoff_factor, std::max(0, n - 1));
  return std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(ns)));
}

std::size_t MockMeshParams::expected_triangles() const {
  std::size_t dome = 20;
  for (int i = 0; i < subdivisions; ++i) dome *= 4;
  std::size_t body = 0;
  if (with_body) {
    auto [nx, ny, nz] = body_grid;
    body = 4 * static_cast<std::size_t>(nx * ny + ny * nz + nx * nz);
  }
  return dome + body;
}

void BackendProfile::check() const {
  if (adapter == AdapterKind::kRemoteHttp && (!endpoint_url || endpoint_url->empty())) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': remote_http requires endpoint_url");
  }
  if (adapter == AdapterKind::kMock && endpoint_url) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': mock adapter must not set endpoint_url");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': timeout must be > 0");
  if (max_in_flight < 1) throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': max_in_flight must be >= 1");
  if (mock_delay_s < 0) throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': mock_delay_s must be >= 0");
  if (mock_mesh.subdivisions < 0 || mock_mesh.subdivisions > 7) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': mock subdivisions must be in [0, 7]");
  }
  for (int n : mock_mesh.body_grid) {
    if (n < 1 || n > 1024) throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': body_grid out of range");
  }
  retry.check();
}

BackendProfile BackendProfile::mock_image(std::string name) {
  BackendProfile p;
  p.name = std::move(name);
  p.kind = BackendKind::kImageSynthesis;
  p.adapter = AdapterKind::kMock;
  p.timeout = std::chrono::seconds(30);
  return p;
}

BackendProfile BackendProfile::mock_mesh_profile(std::string name) {
  BackendProfile p;
  p.name = std::move(name);
  p.kind = BackendKind::kMeshGeneration;
  p.adapter = AdapterKind::kMock;
  p.timeout = std::chrono::seconds(60);
  return p;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidProfile, "profile key '" + key + "' expects a number, got '" + v + "'");
  }
}

}  // namespace

std::map<std::string, BackendProfile> parse_profiles(std::string_view text) {
  auto kv = parse_key_values(text);
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [key, value] : kv) {
    auto dot = key.find('.');
    if (dot == std::string::npos) {
      throw Error(ErrorCode::kInvalidProfile, "profile key '" + key + "' is outside a [profile] section");
    }
    sections[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }

  std::map<std::string, BackendProfile> out;
  for (const auto& [name, keys] : sections) {
    BackendProfile p;
    p.name = name;
    auto kind = keys.find("kind");
    if (kind == keys.end()) throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "' lacks kind");
    if (kind->second == "image_synthesis") {
      p.kind = BackendKind::kImageSynthesis;
      p.timeout = std::chrono::seconds(30);
    } else if (kind->second == "mesh_generation") {
      p.kind = BackendKind::kMeshGeneration;
      p.timeout = std::chrono::seconds(60);
    } else {
      throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': unknown kind '" + kind->second + "'");
    }
    for (const auto& [key, value] : keys) {
      auto full = name + "." + key;
      if (key == "kind") continue;
      if (key == "adapter") {
        if (value == "remote_http") p.adapter = AdapterKind::kRemoteHttp;
        else if (value == "mock") p.adapter = AdapterKind::kMock;
        else throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': unknown adapter '" + value + "'");
      } else if (key == "endpoint_url") {
        p.endpoint_url = value;
      } else if (key == "auth_env_var") {
        p.auth_env_var = value;
      } else if (key == "timeout_s") {
        p.timeout = std::chrono::milliseconds(std::llround(to_double(full, value) * 1000.0));
      } else if (key == "max_in_flight") {
        p.max_in_flight = static_cast<int>(to_double(full, value));
      } else if (key == "retry.max_attempts") {
        p.retry.max_attempts = static_cast<int>(to_double(full, value));
      } else if (key == "retry.base_delay_ms") {
        p.retry.base_delay = std::chrono::milliseconds(std::llround(to_double(full, value)));
      } else if (key == "retry.backoff_factor") {
        p.retry.backoff_factor = to_double(full, value);
      } else if (key == "retry.jitter_fraction") {
        p.retry.jitter_fraction = to_double(full, value);
      } else if (key == "mock_delay_s") {
        p.mock_delay_s = to_double(full, value);
      } else if (key == "mock.subdivisions") {
        p.mock_mesh.subdivisions = static_cast<int>(to_double(full, value));
      } else if (key == "mock.with_body") {
        p.mock_mesh.with_body = value == "true" || value == "1";
      } else if (key == "mock.body_grid") {
        std::istringstream in(value);
        std::string part;
        for (int i = 0; i < 3; ++i) {
          if (!std::getline(in, part, ',')) {
            throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': body_grid needs three integers");
          }
          p.mock_mesh.body_grid[i] = static_cast<int>(to_double(full, part));
        }
      } else {
        throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "': unknown key '" + key + "'");
      }
    }
    p.check();
    out.emplace(name, std::move(p));
  }
  return out;
}

// Mock backends ----------------------------------------------------------------

namespace {

void mock_wait(Clock& clock, double delay_s, std::chrono::milliseconds timeout) {
  if (delay_s <= 0) return;
  auto delay = from_seconds(delay_s);
  if (delay > timeout) {
    clock.sleep_for(timeout);
    throw BackendError(ErrorCode::kBackendTimeout, "mock backend exceeded its timeout", true);
  }
  clock.sleep_for(delay);
}

std::array<std::uint8_t, 32> seed_bytes(const std::string& material) {
  auto hex = sha256_hex(material);
  std::array<std::uint8_t, 32> out{};
  for (int i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  return out;
}

struct P2 {
  double x, y;
};

void fill_convex(Raster& r, const std::vector<P2>& poly, Rgb color) {
  double minx = poly[0].x, maxx = poly[0].x, miny = poly[0].y, maxy = poly[0].y;
  for (const auto& p : poly) {
    minx = std::min(minx, p.x), maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y), maxy = std::max(maxy, p.y);
  }
  // Orientation of the polygon decides which side of each edge is inside.
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    area += a.x * b.y - b.x * a.y;
  }
  double sign = area >= 0 ? 1.0 : -1.0;
  int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  int x1 = std::min(static_cast<int>(r.width) - 1, static_cast<int>(std::ceil(maxx)));
  int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  int y1 = std::min(static_cast<int>(r.height) - 1, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double px = x + 0.5, py = y + 0.5;
      bool inside = true;
      for (std::size_t i = 0; i < poly.size() && inside; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        inside = sign * ((b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)) >= 0;
      }
      if (inside) r.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)) = color;
    }
  }
}

Rgb shade(Rgb c, double f) {
  auto s = [f](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v * f, 0.0, 255.0)); };
  return {s(c.r), s(c.g), s(c.b)};
}

}  // namespace

Raster render_mock_isometric(const std::string& seed_material) {
  auto seed = seed_bytes(seed_material);
  Raster r(kIsometricSize, kIsometricSize, Rgb{236, 236, 232});

  double w = 1.0 + seed[0] / 255.0;  // footprint along x
  double d = 1.0 + seed[1] / 255.0;  // footprint along y
  double h = 0.6 + seed[2] / 255.0;  // wall height
  Rgb base{static_cast<std::uint8_t>(120 + seed[3] % 100), static_cast<std::uint8_t>(110 + seed[4] % 90),
           static_cast<std::uint8_t>(90 + seed[5] % 80)};
  Rgb roof{static_cast<std::uint8_t>(90 + seed[6] % 120), static_cast<std::uint8_t>(80 + seed[7] % 100),
           static_cast<std::uint8_t>(60 + seed[8] % 80)};

  // Isometric projection with the camera looking down at 45 degrees.
  double scale = 200.0;
  const double cx = kIsometricSize / 2.0, cy = kIsometricSize * 0.62;
  auto project = [&](double x, double y, double z) {
    return P2{cx + (x - y) * std::cos(std::numbers::pi / 6) * scale, cy + (x + y) * std::sin(std::numbers::pi / 6) * scale - z * scale};
  };
  double x0 = -w / 2, x1 = w / 2, y0 = -d / 2, y1 = d / 2;

  // Visible faces: +x side, +y side, roof.
  fill_convex(r, {project(x1, y0, 0), project(x1, y1, 0), project(x1, y1, h), project(x1, y0, h)}, shade(base, 0.75));
  fill_convex(r, {project(x0, y1, 0), project(x1, y1, 0), project(x1, y1, h), project(x0, y1, h)}, shade(base, 0.95));
  fill_convex(r, {project(x0, y0, h), project(x1, y0, h), project(x1, y1, h), project(x0, y1, h)}, shade(base, 1.15));

  // Dome silhouette: upper half-disc centred on the roof.
  auto top = project(0, 0, h);
  double radius = std::min(w, d) * 0.35 * scale;
  std::vector<P2> dome;
  for (int i = 0; i <= 32; ++i) {
    double a = std::numbers::pi * i / 32.0;
    dome.push_back({top.x + radius * std::cos(a), top.y - radius * std::sin(a)});
  }
  fill_convex(r, dome, roof);
  return r;
}

MeshDocument build_mock_mesh(const std::string& seed_material, const MockMeshParams& params) {
  auto seed = seed_bytes(seed_material);
  float w = 1.0f + seed[0] / 255.0f;
  float d = 1.0f + seed[1] / 255.0f;
  float h = 0.6f + seed[2] / 255.0f;

  Mesh mesh;
  mesh.name = "building";
  if (params.with_body) {
    auto body = tessellated_box({-w / 2, 0, -d / 2}, {w / 2, h, d / 2}, params.body_grid[0], params.body_grid[1],
                                params.body_grid[2]);
    body.material = 0;
    mesh.primitives.push_back(std::move(body));
  }
  auto dome = icosphere(params.subdivisions, {0, h, 0}, 0.35f * std::min(w, d));
  dome.material = 1;
  mesh.primitives.push_back(std::move(dome));

  MeshDocument doc;
  doc.generator = "heritage3d mock mesh backend";
  doc.meshes.push_back(std::move(mesh));
  doc.nodes.push_back(Node{"building", 0, {}, {0, 0, 0}, {0, 0, 0, 1}, {1, 1, 1}, std::nullopt});
  doc.has_scene = true;
  doc.scene_roots = {0};
  auto color = [&](int off) {
    return nlohmann::json::array({seed[off] / 255.0, seed[off + 1] / 255.0, seed[off + 2] / 255.0, 1.0});
  };
  doc.materials = nlohmann::json::array(
      {{{"name", "facade"}, {"pbrMetallicRoughness", {{"baseColorFactor", color(3)}, {"metallicFactor", 0.0}}}},
       {{"name", "dome"}, {"pbrMetallicRoughness", {{"baseColorFactor", color(6)}, {"metallicFactor", 0.2}}}}});
  return doc;
}

MockImageBackend::MockImageBackend(Clock& clock, double delay_s, std::chrono::milliseconds timeout)
    : clock_(clock), delay_s_(delay_s), timeout_(timeout) {}

BackendResponse MockImageBackend::synthesize(const std::string& prompt, const std::vector<AssetRef>& refs,
                                             const std::vector<Bytes>&) {
  mock_wait(clock_, delay_s_, timeout_);
  std::vector<std::string> ids;
  for (const auto& r : refs) ids.push_back(r.asset_id);
  std::sort(ids.begin(), ids.end());
  std::string material = prompt;
  for (const auto& id : ids) material += "\n" + id;
  return {encode_png(render_mock_isometric(material)), "image/png"};
}

MockMeshBackend::MockMeshBackend(Clock& clock, double delay_s, std::chrono::milliseconds timeout,
                                 MockMeshParams params)
    : clock_(clock), delay_s_(delay_s), timeout_(timeout), params_(params) {}

BackendResponse MockMeshBackend::generate(const AssetRef& image, const Bytes&) {
  mock_wait(clock_, delay_s_, timeout_);
  return {write_gltf(build_mock_mesh(image.asset_id, params_), Container::kGlb), "model/gltf-binary"};
}

// Gateway ------------------------------------------------------------------

class BackendGateway::InFlightGuard {
 public:
  explicit InFlightGuard(Slot& s) : s_(s) {
    std::unique_lock lock(s_.m);
    s_.cv.wait(lock, [&] { return s_.in_flight < s_.profile.max_in_flight; });
    ++s_.in_flight;
  }
  ~InFlightGuard() {
    {
      std::lock_guard lock(s_.m);
      --s_.in_flight;
    }
    s_.cv.notify_one();
  }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  Slot& s_;
};

BackendGateway::BackendGateway(AssetStore& assets, Clock& clock) : assets_(assets), clock_(clock) {}

void BackendGateway::add_profile(BackendProfile profile) {
  profile.check();
  auto slot = std::make_unique<Slot>();
  if (profile.adapter == AdapterKind::kMock) {
    if (profile.kind == BackendKind::kImageSynthesis) {
      slot->image = std::make_shared<MockImageBackend>(clock_, profile.mock_delay_s, profile.timeout);
    } else {
      slot->mesh = std::make_shared<MockMeshBackend>(clock_, profile.mock_delay_s, profile.timeout, profile.mock_mesh);
    }
  } else {
    auto remote = std::make_shared<RemoteHttpBackend>(profile);
    slot->image = remote;
    slot->mesh = remote;
  }
  slot->profile = std::move(profile);
  std::lock_guard lock(mutex_);
  auto name = slot->profile.name;
  slots_[name] = std::move(slot);
}

const BackendProfile& BackendGateway::profile(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(name);
  if (it == slots_.end()) throw Error(ErrorCode::kProfileNotFound, "backend profile '" + name + "' not found");
  return it->second->profile;
}

bool BackendGateway::has_profile(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return slots_.count(name) > 0;
}

std::vector<std::string> BackendGateway::profile_names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : slots_) out.push_back(name);
  return out;
}

void BackendGateway::set_image_backend(const std::string& profile, std::shared_ptr<ImageBackend> backend) {
  slot(profile, BackendKind::kImageSynthesis).image = std::move(backend);
}

void BackendGateway::set_mesh_backend(const std::string& profile, std::shared_ptr<MeshBackend> backend) {
  slot(profile, BackendKind::kMeshGeneration).mesh = std::move(backend);
}

BackendGateway::Slot& BackendGateway::slot(const std::string& name, BackendKind kind) {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(name);
  if (it == slots_.end()) throw Error(ErrorCode::kProfileNotFound, "backend profile '" + name + "' not found");
  if (it->second->profile.kind != kind) {
    throw Error(ErrorCode::kInvalidProfile, "profile '" + name + "' is a " +
                                                std::string(backend_kind_name(it->second->profile.kind)) +
                                                " profile, expected " + std::string(backend_kind_name(kind)));
  }
  return *it->second;
}

GatewayResult BackendGateway::synthesize_isometric(const SynthesisRequest& request, const std::string& name,
                                                   RetryTrace* trace) {
  auto& s = slot(name, BackendKind::kImageSynthesis);
  if (request.reference_images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "synthesis needs at least one reference image");
  }
  if (request.output_width_px != kIsometricSize || request.output_height_px != kIsometricSize) {
    throw Error(ErrorCode::kInvalidArgument, "isometric output is fixed at 1024x1024");
  }
  std::vector<Bytes> ref_bytes;
  for (const auto& ref : request.reference_images) ref_bytes.push_back(assets_.get(ref.asset_id));

  std::uint64_t seed;
  {
    std::lock_guard lock(rng_mutex_);
    seed = ++seed_counter_;
  }
  RetryContext ctx(clock_, seed);
  InFlightGuard guard(s);
  auto start = clock_.monotonic();
  RetryTrace local;
  RetryTrace& t = trace ? *trace : local;
  auto bytes = with_retry(
      [&] {
        auto resp = s.image->synthesize(request.prompt.text, request.reference_images, ref_bytes);
        auto info = probe_image(resp.body);
        if (!info || info->media_type != MediaType::kPng) {
          throw BackendError(ErrorCode::kInvalidOutput, "synthesis backend returned bytes that are not a PNG", false);
        }
        if (info->width != request.output_width_px || info->height != request.output_height_px) {
          throw BackendError(ErrorCode::kInvalidOutput,
                             "synthesis backend returned " + std::to_string(info->width) + "x" +
                                 std::to_string(info->height) + ", expected 1024x1024",
                             false);
        }
        return std::move(resp.body);
      },
      s.profile.retry, ctx, &t);
  GatewayResult result;
  result.asset = assets_.put(bytes, MediaType::kPng);
  result.elapsed_s = clock_.seconds_since(start);
  result.attempts = t.attempts;
  return result;
}

GatewayResult BackendGateway::generate_mesh(const AssetRef& image, const std::string& name, RetryTrace* trace) {
  auto& s = slot(name, BackendKind::kMeshGeneration);
  if (image.media_type != MediaType::kPng) {
    throw Error(ErrorCode::kInvalidArgument, "mesh generation input must be a stored PNG");
  }
  auto image_bytes = assets_.get(image.asset_id);

  std::uint64_t seed;
  {
    std::lock_guard lock(rng_mutex_);
    seed = ++seed_counter_;
  }
  RetryContext ctx(clock_, seed);
  InFlightGuard guard(s);
  auto start = clock_.monotonic();
  RetryTrace local;
  RetryTrace& t = trace ? *trace : local;
  ValidationReport report;
  auto bytes = with_retry(
      [&] {
        auto resp = s.mesh->generate(image, image_bytes);
        MeshDocument doc;
        try {
          doc = parse_gltf(resp.body);
        } catch (const BackendError&) {
          throw;
        } catch (const Error& e) {
          throw BackendError(ErrorCode::kInvalidOutput, std::string("mesh backend output is not glTF 2.0: ") + e.what(),
                             false);
        }
        report = validate(doc);
        if (!report.ok()) {
          throw BackendError(ErrorCode::kInvalidOutput,
                             "mesh backend output failed validation: " + report.errors.front().message, false);
        }
        return std::move(resp.body);
      },
      s.profile.retry, ctx, &t);
  bool glb = bytes.size() >= 4 && bytes[0] == 'g' && bytes[1] == 'l' && bytes[2] == 'T' && bytes[3] == 'F';
  GatewayResult result;
  result.asset = assets_.put(bytes, glb ? MediaType::kGlb : MediaType::kGltfJson);
  result.elapsed_s = clock_.seconds_since(start);
  result.attempts = t.attempts;
  result.validation = std::move(report);
  return result;
}

}  // namespace h3d
