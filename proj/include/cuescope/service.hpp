#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cuescope/error.hpp"
#include "cuescope/pipeline.hpp"
#include "cuescope/store.hpp"

namespace cuescope {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "cuescope-data";
  std::optional<std::filesystem::path> static_dir;  // UI assets mounted at /
  std::size_t workers = 1;
  std::size_t default_k = 6;
};

// JSON file {"host", "port", "data_dir", "static_dir", "workers", "default_k"};
// missing keys keep their defaults.
ServiceConfig parse_service_config(std::string_view document, ServiceConfig base = {});
// CUESCOPE_PORT and CUESCOPE_DATA_DIR take precedence over the file.
using EnvLookup = std::function<std::optional<std::string>(const char*)>;
ServiceConfig apply_env_overrides(ServiceConfig config, const EnvLookup& env);
std::optional<std::string> process_env(const char* name);

struct CreateRequest {
  std::optional<std::string> id;  // content-addressed when absent
  std::string title;
  std::string manifest;
  std::string frames;
  std::optional<std::string> video_path;
  PipelineOptions config;
};

// Transport-independent core of the session service. Scoring runs on
// background workers; every read is served from the store.
class SessionService {
 public:
  // With zero workers, jobs only run when drain() is called.
  explicit SessionService(std::filesystem::path data_dir, std::size_t workers = 1, std::size_t default_k = 6);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Documents that fail to parse still produce a session, with status failed
  // and the diagnostic stored; the caller decides how to surface it.
  // Throws Error(conflict) for a taken id.
  SessionRecord create(const CreateRequest& request);
  std::vector<SessionRecord> list() const;
  SessionRecord get(std::string_view id) const;

  // Throw Error(not_found) or Error(not_ready) when the session is unknown or
  // has no series yet.
  std::string scores_document(std::string_view id);
  std::string scenes_document(std::string_view id, long long k);
  std::string scenes_document(std::string_view id) { return scenes_document(id, static_cast<long long>(default_k_)); }

  // Marks the session pending and queues a new job, optionally with a new config.
  SessionRecord rescore(std::string_view id, std::optional<PipelineOptions> config = std::nullopt);

  // Video file of a session; Error(not_found) when none is attached or it is missing.
  std::filesystem::path video(std::string_view id) const;

  // Blocks until the queue is empty and no job is running.
  void wait_idle();
  // Runs queued jobs on the calling thread; returns how many ran.
  std::size_t drain();

  SessionStore& store() { return store_; }
  std::size_t default_k() const { return default_k_; }

 private:
  void enqueue(const std::string& id);
  void worker_loop();
  void run_job(const std::string& id);
  std::mutex& session_lock(const std::string& id);
  std::shared_ptr<const ScoreSeries> series(std::string_view id);

  SessionStore store_;
  std::size_t default_k_;

  mutable std::mutex state_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  std::set<std::string> queued_;
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::map<std::string, std::unique_ptr<std::mutex>> session_locks_;
  std::map<std::string, unsigned long> generation_;
  std::map<std::string, std::shared_ptr<const ScoreSeries>> cache_;
  std::vector<std::thread> workers_;
};

int http_status(ErrorKind kind) noexcept;

// HTTP front end over a SessionService.
class ApiServer {
 public:
  ApiServer(SessionService& service, const ServiceConfig& config);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cuescope
