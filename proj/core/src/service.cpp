#include "h3d/service.hpp"

#include <httplib.h>

#include "h3d/json_io.hpp"
#include "h3d/metrics.hpp"

namespace h3d {

using nlohmann::json;

json ApiError::to_json() const { return {{"status", status}, {"code", code}, {"message", message}}; }

ApiError ApiError::from(const Error& e) {
  return {http_status(e.code()), std::string(code_name(e.code())), e.what()};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const ApiError& err) { send_json(res, err.status, err.to_json()); }

// Runs a route body and converts every failure into an ApiError response.
template <typename F>
httplib::Server::Handler guarded(F&& body) {
  return [body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
    try {
      body(req, res);
    } catch (const Error& e) {
      send_error(res, ApiError::from(e));
    } catch (const json::exception& e) {
      send_error(res, {400, "invalid_argument", std::string("bad JSON: ") + e.what()});
    } catch (const std::exception& e) {
      send_error(res, {500, "internal", e.what()});
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  auto j = json::parse(req.body);
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

// Content-addressed download with ETag revalidation.
void send_blob(const httplib::Request& req, httplib::Response& res, const Bytes& bytes, const std::string& digest,
               const std::string& mime) {
  auto etag = "\"" + digest + "\"";
  res.set_header("ETag", etag);
  res.set_header("Cache-Control", "no-cache");
  if (req.get_header_value("If-None-Match") == etag) {
    res.status = 304;
    return;
  }
  res.status = 200;
  res.set_content(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()), mime);
}

json metrics_json(std::span<const MetricsRow> rows) {
  json out = {{"rows", json::array()}, {"summary", nullptr}};
  for (const auto& r : rows) {
    out["rows"].push_back({{"site", r.site_name},
                           {"t2d_s", r.t2d},
                           {"t3d_s", r.t3d},
                           {"total_s", r.total},
                           {"sfm_low_hr", r.baseline_low},
                           {"sfm_high_hr", r.baseline_high}});
  }
  if (!rows.empty()) {
    auto s = aggregate(rows);
    json summary = {{"rows", s.rows},
                    {"mean_t2d", s.mean_t2d},
                    {"mean_t3d", s.mean_t3d},
                    {"mean_total", s.mean_total},
                    {"mean_baseline_mid", s.mean_baseline_mid},
                    {"speedup_low", nullptr},
                    {"speedup_high", nullptr}};
    if (s.speedup) {
      summary["speedup_low"] = s.speedup->low;
      summary["speedup_high"] = s.speedup->high;
    }
    out["summary"] = summary;
  }
  return out;
}

}  // namespace

Service::Service(ServiceConfig config, Workspace& workspace)
    : config_(std::move(config)), ws_(workspace), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(64u << 20);
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  auto& s = *server_;

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, {res.status, res.status == 404 ? "not_found" : "http_error", httplib::status_message(res.status)});
    return httplib::Server::HandlerResponse::Handled;
  });

  s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, {{"status", "ok"}});
        }));

  s.Post("/sites", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto record = site_from_json(parse_body(req));
           record.images.clear();
           auto id = ws_.catalog().register_site(std::move(record));
           send_json(res, 201, to_json(ws_.catalog().get(id)));
         }));

  s.Get("/sites", guarded([this](const httplib::Request&, httplib::Response& res) {
          json out = json::array();
          for (const auto& site : ws_.catalog().list()) out.push_back(to_json(site));
          send_json(res, 200, out);
        }));

  s.Get(R"(/sites/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, to_json(ws_.catalog().get(req.matches[1])));
        }));

  s.Get(R"(/sites/([^/]+)/readiness)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, to_json(ws_.catalog().validate_site_ready(req.matches[1])));
        }));

  s.Post(R"(/sites/([^/]+)/images)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           if (!req.has_file("file")) throw Error(ErrorCode::kInvalidArgument, "multipart part 'file' is required");
           if (!req.has_file("azimuth_deg")) {
             throw Error(ErrorCode::kInvalidAzimuth, "multipart part 'azimuth_deg' is required");
           }
           CaptureMeta meta;
           const auto& az = req.get_file_value("azimuth_deg").content;
           try {
             std::size_t used = 0;
             meta.azimuth_deg = std::stod(az, &used);
             if (used != az.size()) throw std::invalid_argument(az);
           } catch (const std::exception&) {
             throw Error(ErrorCode::kInvalidAzimuth, "azimuth_deg '" + az + "' is not a number");
           }
           if (req.has_file("source")) {
             auto src = parse_capture_source(req.get_file_value("source").content);
             if (!src) throw Error(ErrorCode::kInvalidArgument, "unknown capture source");
             meta.source = *src;
           }
           if (req.has_file("captured_at")) meta.captured_at = req.get_file_value("captured_at").content;
           const auto& file = req.get_file_value("file").content;
           auto image = ws_.catalog().ingest_image(req.matches[1], as_bytes(file), meta);
           send_json(res, 201, to_json(image.asset));
         }));

  s.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto body = parse_body(req);
           if (!body.contains("site_id") || !body["site_id"].is_string()) {
             throw Error(ErrorCode::kInvalidArgument, "site_id is required");
           }
           JobConfig config;
           config.auto_decimate = config_.auto_decimate;
           if (body.contains("template_id")) config.template_id = body["template_id"].get<std::string>();
           if (body.contains("profiles")) {
             const auto& p = body["profiles"];
             if (p.contains("image")) config.image_profile = p["image"].get<std::string>();
             if (p.contains("mesh")) config.mesh_profile = p["mesh"].get<std::string>();
           }
           if (body.contains("auto_decimate")) config.auto_decimate = body["auto_decimate"].get<bool>();
           auto id = ws_.orchestrator().submit_job(body["site_id"].get<std::string>(), config);
           enqueue(id, false);
           send_json(res, 202, {{"job_id", id}});
         }));

  s.Get("/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
          json out = json::array();
          for (const auto& job : ws_.orchestrator().jobs()) out.push_back(to_json(job));
          send_json(res, 200, out);
        }));

  s.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, to_json(ws_.orchestrator().job_status(req.matches[1])));
        }));

  s.Post(R"(/jobs/([^/]+)/retry)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           std::string id = req.matches[1];
           auto job = ws_.orchestrator().job_status(id);
           if (job.stage != Stage::kFailed) {
             throw Error(ErrorCode::kJobNotFailed, "job '" + id + "' is " + std::string(stage_name(job.stage)));
           }
           enqueue(id, true);
           send_json(res, 202, {{"job_id", id}});
         }));

  s.Get(R"(/assets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          std::string id = req.matches[1];
          auto ref = ws_.assets().ref(id);
          send_blob(req, res, ws_.assets().get(id), id, std::string(mime_type(ref.media_type)));
        }));

  s.Get(R"(/models/([^/]+)/(model\.gltf|model\.glb|model\.obj))",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          std::string file = req.matches[2];
          auto job = ws_.orchestrator().job_status(req.matches[1]);
          if (job.stage != Stage::kDone) {
            throw Error(ErrorCode::kModelNotFound, "job '" + job.job_id + "' has not published a model");
          }
          auto path = ws_.orchestrator().published_dir(job) / file;
          if (!std::filesystem::exists(path)) throw Error(ErrorCode::kModelNotFound, file + " is missing");
          auto bytes = read_file(path);
          std::string mime = file == "model.gltf"  ? "model/gltf+json"
                             : file == "model.glb" ? "model/gltf-binary"
                                                   : "text/plain";
          send_blob(req, res, bytes, sha256_hex(bytes), mime);
        }));

  s.Get("/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto format = req.has_param("format") ? req.get_param_value("format") : "json";
          auto jobs = ws_.orchestrator().jobs();
          auto sites = ws_.catalog().list();
          auto rows = rows_from_jobs(jobs, sites);
          if (format == "json") {
            send_json(res, 200, metrics_json(rows));
          } else if (format == "csv") {
            res.status = 200;
            if (rows.empty()) {
              res.set_content("site,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\n", "text/csv");
            } else {
              res.set_content(emit_report(rows, aggregate(rows), ReportFormat::kCsv), "text/csv");
            }
          } else {
            throw Error(ErrorCode::kInvalidArgument, "format must be csv or json");
          }
        }));

  if (!config_.static_dir.empty()) s.set_mount_point("/", config_.static_dir.string());
}

int Service::start() {
  if (server_->is_running()) return port_;
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
    if (port_ < 0) throw Error(ErrorCode::kIo, "cannot bind " + config_.host);
  } else {
    if (!server_->bind_to_port(config_.host, config_.port)) {
      throw Error(ErrorCode::kIo, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    port_ = config_.port;
  }
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = false;
  }
  for (int i = 0; i < std::max(1, config_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void Service::serve_forever() {
  start();
  std::unique_lock lock(queue_mutex_);
  queue_cv_.wait(lock, [this] { return stopping_; });
}

void Service::stop() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  idle_cv_.notify_all();
  server_->stop();
  if (listener_.joinable()) listener_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void Service::resume_pending_jobs() {
  for (const auto& job : ws_.orchestrator().jobs()) {
    if (!is_terminal(job.stage)) enqueue(job.job_id, false);
  }
}

void Service::wait_idle() {
  std::unique_lock lock(queue_mutex_);
  idle_cv_.wait(lock, [this] { return stopping_ || (queue_.empty() && running_ == 0); });
}

void Service::enqueue(const std::string& job_id, bool retry) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.emplace_back(job_id, retry);
  }
  queue_cv_.notify_all();
}

void Service::worker_loop() {
  for (;;) {
    std::pair<std::string, bool> item;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      item = std::move(queue_.front());
      queue_.pop_front();
      ++running_;
    }
    auto& orch = ws_.orchestrator();
    try {
      auto job = orch.job_status(item.first);
      if (job.stage == Stage::kFailed && item.second) job = orch.advance(item.first, true);
      for (;;) {
        if (is_terminal(job.stage)) break;
        {
          std::lock_guard lock(queue_mutex_);
          if (stopping_) break;  // the journal keeps the job resumable
        }
        job = orch.advance(item.first);
      }
    } catch (const std::exception&) {
      // Stage failures are recorded on the job; anything else leaves it resumable.
    }
    {
      std::lock_guard lock(queue_mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace h3d
