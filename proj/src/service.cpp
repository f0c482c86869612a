#include "cuescope/service.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "cuescope/documents.hpp"
#include "cuescope/ingest.hpp"
#include "cuescope/report.hpp"

namespace cuescope {

namespace fs = std::filesystem;
using nlohmann::json;

ServiceConfig parse_service_config(std::string_view document, ServiceConfig c) {
  try {
    const auto doc = json::parse(document);
    if (!doc.is_object()) fail(ErrorKind::schema, "service config: expected an object");
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    if (doc.contains("data_dir")) c.data_dir = doc["data_dir"].get<std::string>();
    if (doc.contains("static_dir") && !doc["static_dir"].is_null()) c.static_dir = doc["static_dir"].get<std::string>();
    c.workers = doc.value("workers", c.workers);
    c.default_k = doc.value("default_k", c.default_k);
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, std::string("service config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) fail(ErrorKind::parameter, "service config: port out of range");
  if (c.workers == 0) fail(ErrorKind::parameter, "service config: workers must be positive");
  if (c.default_k == 0) fail(ErrorKind::parameter, "service config: default_k must be positive");
  return c;
}

ServiceConfig apply_env_overrides(ServiceConfig c, const EnvLookup& env) {
  if (auto port = env("CUESCOPE_PORT")) {
    char* end = nullptr;
    const long p = std::strtol(port->c_str(), &end, 10);
    if (port->empty() || *end != '\0' || p < 0 || p > 65535)
      fail(ErrorKind::parameter, "CUESCOPE_PORT is not a port number: '" + *port + "'");
    c.port = static_cast<int>(p);
  }
  if (auto dir = env("CUESCOPE_DATA_DIR")) {
    if (dir->empty()) fail(ErrorKind::parameter, "CUESCOPE_DATA_DIR is empty");
    c.data_dir = *dir;
  }
  return c;
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

SessionService::SessionService(fs::path data_dir, std::size_t workers, std::size_t default_k)
    : store_(std::move(data_dir)), default_k_(default_k) {
  if (default_k == 0) fail(ErrorKind::parameter, "default k must be positive");
  // Jobs interrupted by a previous shutdown are picked up again.
  for (const auto& r : store_.list()) {
    if (r.status == SessionStatus::pending) {
      queue_.push_back(r.id);
      queued_.insert(r.id);
    }
  }
  for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

SessionService::~SessionService() {
  {
    std::lock_guard lock(state_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

SessionRecord SessionService::create(const CreateRequest& req) {
  SessionRecord r;
  r.id = req.id ? *req.id : content_id(req.manifest, req.frames, render_pipeline_config(req.config));
  if (!valid_session_id(r.id)) fail(ErrorKind::parameter, "invalid session id '" + r.id + "'");
  r.title = req.title.empty() ? r.id : req.title;
  r.video_path = req.video_path;
  r.config = req.config;
  try {
    const auto layout = parse_manifest(req.manifest);
    parse_frames(req.frames, layout);
    r.status = SessionStatus::pending;
  } catch (const Error& e) {
    r.status = SessionStatus::failed;
    r.diagnostic = e.what();
  }
  store_.create(r, req.manifest, req.frames);
  if (r.status == SessionStatus::pending) {
    {
      std::lock_guard lock(state_mutex_);
      ++generation_[r.id];
    }
    enqueue(r.id);
  }
  return r;
}

std::vector<SessionRecord> SessionService::list() const {
  std::lock_guard lock(state_mutex_);
  return store_.list();
}

SessionRecord SessionService::get(std::string_view id) const {
  std::lock_guard lock(state_mutex_);
  return store_.load(id);
}

std::shared_ptr<const ScoreSeries> SessionService::series(std::string_view id) {
  std::lock_guard lock(state_mutex_);
  const auto record = store_.load(id);
  if (record.status == SessionStatus::pending) fail(ErrorKind::not_ready, "session '" + record.id + "' is still being scored");
  if (record.status == SessionStatus::failed)
    fail(ErrorKind::not_ready, "session '" + record.id + "' failed: " + record.diagnostic);
  if (auto it = cache_.find(record.id); it != cache_.end()) return it->second;
  const auto snapshot = store_.series(record.id);
  if (!snapshot) fail(ErrorKind::data, "session '" + record.id + "' is scored but has no stored series");
  auto parsed = std::make_shared<const ScoreSeries>(parse_series_snapshot(*snapshot));
  cache_[record.id] = parsed;
  return parsed;
}

std::string SessionService::scores_document(std::string_view id) {
  const auto s = series(id);
  check_tiling(*s);
  return render_series(*s);
}

std::string SessionService::scenes_document(std::string_view id, long long k) {
  if (k <= 0) fail(ErrorKind::parameter, "k must be a positive integer");
  const auto s = series(id);
  return render_report(select_top_k(*s, k));
}

SessionRecord SessionService::rescore(std::string_view id, std::optional<PipelineOptions> config) {
  SessionRecord r;
  {
    std::lock_guard lock(state_mutex_);
    r = store_.load(id);
    if (config) r.config = *config;
    // Frames rejected at upload stay rejected.
    const auto layout = parse_manifest(store_.manifest(r.id));
    parse_frames(store_.frames(r.id), layout);
    r.status = SessionStatus::pending;
    r.diagnostic.clear();
    store_.save(r);
    cache_.erase(r.id);
    ++generation_[r.id];
  }
  enqueue(r.id);
  return r;
}

fs::path SessionService::video(std::string_view id) const {
  const auto r = get(id);
  if (!r.video_path) fail(ErrorKind::not_found, "session '" + r.id + "' has no video");
  const fs::path p = *r.video_path;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) fail(ErrorKind::not_found, "video file " + p.string() + " is missing");
  return p;
}

void SessionService::wait_idle() {
  std::unique_lock lock(state_mutex_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

std::size_t SessionService::drain() {
  std::size_t ran = 0;
  for (;;) {
    std::string id;
    {
      std::lock_guard lock(state_mutex_);
      if (queue_.empty()) break;
      id = queue_.front();
      queue_.pop_front();
      queued_.erase(id);
      ++running_;
    }
    run_job(id);
    ++ran;
    {
      std::lock_guard lock(state_mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
  return ran;
}

void SessionService::enqueue(const std::string& id) {
  {
    std::lock_guard lock(state_mutex_);
    if (!queued_.insert(id).second) return;
    queue_.push_back(id);
  }
  queue_cv_.notify_one();
}

std::mutex& SessionService::session_lock(const std::string& id) {
  std::lock_guard lock(state_mutex_);
  auto& slot = session_locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void SessionService::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(state_mutex_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      queued_.erase(id);
      ++running_;
    }
    run_job(id);
    {
      std::lock_guard lock(state_mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

void SessionService::run_job(const std::string& id) {
  std::lock_guard job_lock(session_lock(id));
  SessionRecord record;
  unsigned long generation = 0;
  std::string manifest, frames;
  {
    std::lock_guard lock(state_mutex_);
    try {
      record = store_.load(id);
      manifest = store_.manifest(id);
      frames = store_.frames(id);
    } catch (const Error&) {
      return;
    }
    if (record.status != SessionStatus::pending) return;
    generation = generation_[id];
  }

  std::string snapshot, report, diagnostic;
  try {
    const auto analysis = analyze_documents(manifest, frames, id, record.config);
    snapshot = render_series_snapshot(analysis.series);
    report = render_report(select_top_k(analysis.series, static_cast<long long>(default_k_)));
  } catch (const std::exception& e) {
    diagnostic = e.what();
  }

  std::lock_guard lock(state_mutex_);
  // A rescore issued while this job ran supersedes its result.
  if (generation_[id] != generation) return;
  try {
    auto current = store_.load(id);
    if (diagnostic.empty()) {
      store_.put_results(id, snapshot, report);
      current.status = SessionStatus::scored;
      current.diagnostic.clear();
    } else {
      current.status = SessionStatus::failed;
      current.diagnostic = diagnostic;
    }
    store_.save(current);
    cache_.erase(id);
  } catch (const Error&) {
  }
}

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::not_ready:
    case ErrorKind::conflict: return 409;
    case ErrorKind::parameter:
    case ErrorKind::index: return 400;
    case ErrorKind::range: return 416;
    case ErrorKind::schema:
    case ErrorKind::validation:
    case ErrorKind::ordering:
    case ErrorKind::dimension:
    case ErrorKind::insufficient_data:
    case ErrorKind::data: return 422;
    case ErrorKind::contract:
    case ErrorKind::io: return 500;
  }
  return 500;
}

}  // namespace cuescope
