#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "h3d/asset_store.hpp"
#include "h3d/clock.hpp"
#include "h3d/image_info.hpp"
#include "h3d/mesh.hpp"
#include "h3d/prompt.hpp"
#include "h3d/retry.hpp"

namespace h3d {

enum class BackendKind { kImageSynthesis, kMeshGeneration };
enum class AdapterKind { kRemoteHttp, kMock };

std::string_view backend_kind_name(BackendKind k) noexcept;
std::string_view adapter_kind_name(AdapterKind k) noexcept;

inline constexpr std::uint32_t kIsometricSize = 1024;

// Shape parameters for the mock mesh backend: a rectangular prism body split
// into a body_grid quad lattice, topped with an icosphere dome.
struct MockMeshParams {
  int subdivisions = 5;
  bool with_body = true;
  std::array<int, 3> body_grid{52, 52, 69};

  // 20 * 4^s for the dome plus 4 * (nx*ny + ny*nz + nx*nz) for the body.
  std::size_t expected_triangles() const;
};

struct BackendProfile {
  std::string name;
  BackendKind kind = BackendKind::kImageSynthesis;
  AdapterKind adapter = AdapterKind::kMock;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> auth_env_var;
  std::chrono::milliseconds timeout{30'000};
  RetryPolicy retry;
  int max_in_flight = 2;

  // Mock-only knobs.
  double mock_delay_s = 0.0;
  MockMeshParams mock_mesh;

  // remote_http requires an endpoint; mock forbids one.
  void check() const;

  static BackendProfile mock_image(std::string name = "mock-image");
  static BackendProfile mock_mesh_profile(std::string name = "mock-mesh");
};

// Parses the key=value profile file. Each profile is a `[name]` section:
//
//   [hexagen]
//   kind = mesh_generation
//   adapter = remote_http
//   endpoint_url = http://localhost:9000/v1/mesh
//   auth_env_var = HEXAGEN_API_KEY
//   timeout_s = 60
//   retry.max_attempts = 3
std::map<std::string, BackendProfile> parse_profiles(std::string_view text);

struct SynthesisRequest {
  PromptText prompt;
  std::vector<AssetRef> reference_images;
  std::uint32_t output_width_px = kIsometricSize;
  std::uint32_t output_height_px = kIsometricSize;
};

struct BackendResponse {
  Bytes body;
  std::string content_type;
};

// One generation backend. Implementations throw BackendError.
class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  virtual BackendResponse synthesize(const std::string& prompt,
                                     const std::vector<AssetRef>& refs,
                                     const std::vector<Bytes>& ref_bytes) = 0;
};

class MeshBackend {
 public:
  virtual ~MeshBackend() = default;
  virtual BackendResponse generate(const AssetRef& image, const Bytes& image_bytes) = 0;
};

// Deterministic procedural backends.
class MockImageBackend final : public ImageBackend {
 public:
  MockImageBackend(Clock& clock, double delay_s, std::chrono::milliseconds timeout);
  BackendResponse synthesize(const std::string& prompt, const std::vector<AssetRef>& refs,
                             const std::vector<Bytes>& ref_bytes) override;

 private:
  Clock& clock_;
  double delay_s_;
  std::chrono::milliseconds timeout_;
};

class MockMeshBackend final : public MeshBackend {
 public:
  MockMeshBackend(Clock& clock, double delay_s, std::chrono::milliseconds timeout,
                  MockMeshParams params);
  BackendResponse generate(const AssetRef& image, const Bytes& image_bytes) override;

 private:
  Clock& clock_;
  double delay_s_;
  std::chrono::milliseconds timeout_;
  MockMeshParams params_;
};

// Renders the procedural isometric building for a seed.
Raster render_mock_isometric(const std::string& seed_material);
// Builds the procedural building mesh for a seed.
MeshDocument build_mock_mesh(const std::string& seed_material, const MockMeshParams& params);

// Generic REST adapter: POST multipart with `prompt` and `image[n]` parts (or
// a single `image` part for mesh generation); the response body is the asset.
class RemoteHttpBackend final : public ImageBackend, public MeshBackend {
 public:
  explicit RemoteHttpBackend(BackendProfile profile);
  BackendResponse synthesize(const std::string& prompt, const std::vector<AssetRef>& refs,
                             const std::vector<Bytes>& ref_bytes) override;
  BackendResponse generate(const AssetRef& image, const Bytes& image_bytes) override;

 private:
  BackendResponse post(const std::string& prompt, const std::vector<Bytes>& images);
  BackendProfile profile_;
};

struct GatewayResult {
  AssetRef asset;
  double elapsed_s = 0.0;
  int attempts = 0;
  std::optional<ValidationReport> validation;  // mesh generation only
};

// Routes generation calls to the backend configured for a profile, applying
// the retry policy, the per-profile in-flight limit and output contracts.
class BackendGateway {
 public:
  BackendGateway(AssetStore& assets, Clock& clock);

  void add_profile(BackendProfile profile);
  const BackendProfile& profile(const std::string& name) const;
  bool has_profile(const std::string& name) const;
  std::vector<std::string> profile_names() const;

  // Replaces the adapter built from the profile; used for custom transports.
  void set_image_backend(const std::string& profile, std::shared_ptr<ImageBackend> backend);
  void set_mesh_backend(const std::string& profile, std::shared_ptr<MeshBackend> backend);

  GatewayResult synthesize_isometric(const SynthesisRequest& request, const std::string& profile,
                                     RetryTrace* trace = nullptr);
  GatewayResult generate_mesh(const AssetRef& image, const std::string& profile,
                              RetryTrace* trace = nullptr);

 private:
  struct Slot {
    BackendProfile profile;
    std::shared_ptr<ImageBackend> image;
    std::shared_ptr<MeshBackend> mesh;
    std::mutex m;
    std::condition_variable cv;
    int in_flight = 0;
  };

  class InFlightGuard;

  Slot& slot(const std::string& name, BackendKind kind);

  AssetStore& assets_;
  Clock& clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::mutex rng_mutex_;
  std::uint64_t seed_counter_ = 0;
};

}  // namespace h3d
