#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "h3d/config.hpp"
#include "h3d/error.hpp"
#include "h3d/workspace.hpp"

namespace httplib {
class Server;
}

namespace h3d {

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;

  nlohmann::json to_json() const;
  static ApiError from(const Error& e);
};

// HTTP front end over a Workspace. Jobs submitted through POST /jobs are
// advanced by a pool of worker threads; stop() lets each worker finish the
// stage it is running before returning.
class Service {
 public:
  Service(ServiceConfig config, Workspace& workspace);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds (port 0 picks a free port) and starts serving on a background
  // thread. Returns the bound port. Throws Error(kIo) if binding fails.
  int start();
  // Blocks in the calling thread until stop() is called from elsewhere.
  void serve_forever();
  void stop();

  int port() const { return port_; }

  // Re-queues persisted jobs that were interrupted mid-pipeline.
  void resume_pending_jobs();

  // Waits until no job is queued or running. For tests.
  void wait_idle();

 private:
  void install_routes();
  void enqueue(const std::string& job_id, bool retry);
  void worker_loop();

  ServiceConfig config_;
  Workspace& ws_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  int port_ = 0;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::pair<std::string, bool>> queue_;
  int running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace h3d
