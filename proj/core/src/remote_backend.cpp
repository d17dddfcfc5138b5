#include <cstdlib>

#include <httplib.h>

#include "h3d/error.hpp"
#include "h3d/gateway.hpp"

namespace h3d {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::kInvalidProfile, "endpoint_url '" + url + "' lacks a scheme");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

RemoteHttpBackend::RemoteHttpBackend(BackendProfile profile) : profile_(std::move(profile)) {
  profile_.check();
  split_url(*profile_.endpoint_url);
}

BackendResponse RemoteHttpBackend::post(const std::string& prompt, const std::vector<Bytes>& images) {
  auto url = split_url(*profile_.endpoint_url);
  httplib::Client client(url.origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(profile_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(profile_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (profile_.auth_env_var) {
    const char* key = std::getenv(profile_.auth_env_var->c_str());
    if (!key || !*key) {
      throw BackendError(ErrorCode::kBackendRejected,
                         "environment variable " + *profile_.auth_env_var + " holding the API key is not set", false);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  httplib::MultipartFormDataItems items;
  if (!prompt.empty()) items.push_back({"prompt", prompt, "", "text/plain"});
  for (std::size_t i = 0; i < images.size(); ++i) {
    items.push_back({"image[" + std::to_string(i) + "]", std::string(images[i].begin(), images[i].end()),
                     "image" + std::to_string(i) + ".png", "image/png"});
  }

  auto res = client.Post(url.path, headers, items);
  if (!res) {
    auto err = res.error();
    bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                   err == httplib::Error::ConnectionTimeout;
    throw BackendError(timeout ? ErrorCode::kBackendTimeout : ErrorCode::kBackendUnreachable,
                       "request to " + *profile_.endpoint_url + " failed: " + httplib::to_string(err), true);
  }
  if (res->status != 200) {
    bool retry = retryable_status(res->status);
    throw BackendError(retry ? ErrorCode::kBackendUnreachable : ErrorCode::kBackendRejected,
                       "backend " + profile_.name + " answered HTTP " + std::to_string(res->status), retry);
  }
  return {Bytes(res->body.begin(), res->body.end()), res->get_header_value("Content-Type")};
}

BackendResponse RemoteHttpBackend::synthesize(const std::string& prompt, const std::vector<AssetRef>&,
                                              const std::vector<Bytes>& ref_bytes) {
  return post(prompt, ref_bytes);
}

BackendResponse RemoteHttpBackend::generate(const AssetRef&, const Bytes& image_bytes) {
  return post("", {image_bytes});
}

}  // namespace h3d
