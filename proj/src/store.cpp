#include "cuescope/store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"

namespace cuescope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::pending: return "pending";
    case SessionStatus::scored: return "scored";
    case SessionStatus::failed: return "failed";
  }
  return "pending";
}

SessionStatus parse_session_status(std::string_view s) {
  if (s == "pending") return SessionStatus::pending;
  if (s == "scored") return SessionStatus::scored;
  if (s == "failed") return SessionStatus::failed;
  fail(ErrorKind::schema, "unknown session status '" + std::string(s) + "'");
}

std::string render_session(const SessionRecord& r) {
  JsonWriter w;
  write_session(w, r);
  return w.str();
}

void write_session(JsonWriter& w, const SessionRecord& r) {
  w.begin_object();
  w.key("id").value(r.id);
  w.key("title").value(r.title);
  w.key("created_at").value(r.created_at);
  w.key("status").value(to_string(r.status));
  w.key("feature_path").value(r.feature_path);
  w.key("manifest_path").value(r.manifest_path);
  w.key("video_path");
  if (r.video_path) {
    w.value(*r.video_path);
  } else {
    w.null();
  }
  w.key("diagnostic");
  if (r.diagnostic.empty()) {
    w.null();
  } else {
    w.value(r.diagnostic);
  }
  w.key("config");
  write_pipeline_config(w, r.config);
  w.end_object();
}

SessionRecord parse_session(std::string_view document) {
  try {
    const auto doc = json::parse(document);
    SessionRecord r;
    r.id = doc.at("id").get<std::string>();
    r.title = doc.at("title").get<std::string>();
    r.created_at = doc.at("created_at").get<std::string>();
    r.status = parse_session_status(doc.at("status").get<std::string>());
    r.feature_path = doc.at("feature_path").get<std::string>();
    r.manifest_path = doc.at("manifest_path").get<std::string>();
    if (!doc.at("video_path").is_null()) r.video_path = doc["video_path"].get<std::string>();
    if (!doc.at("diagnostic").is_null()) r.diagnostic = doc["diagnostic"].get<std::string>();
    r.config = parse_pipeline_config(doc.at("config").dump());
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, std::string("session: ") + e.what());
  }
}

bool valid_session_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string content_id(std::string_view manifest, std::string_view frames, std::string_view config) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) fail(ErrorKind::io, "cannot allocate digest context");
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  const auto feed = [&](std::string_view part) {
    // length prefix keeps the three parts unambiguous
    const auto n = std::to_string(part.size()) + ":";
    EVP_DigestUpdate(ctx, n.data(), n.size());
    EVP_DigestUpdate(ctx, part.data(), part.size());
  };
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1;
  if (ok) {
    feed(manifest);
    feed(frames);
    feed(config);
    EVP_DigestFinal_ex(ctx, digest.data(), &len);
  }
  EVP_MD_CTX_free(ctx);
  if (!ok) fail(ErrorKind::io, "SHA-256 unavailable");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

void atomic_write(const fs::path& path, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::io, "cannot replace " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

}  // namespace

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "sessions", ec);
  if (ec) fail(ErrorKind::io, "cannot create data directory " + root_.string() + ": " + ec.message());
}

fs::path SessionStore::dir(std::string_view id) const {
  if (!valid_session_id(id)) fail(ErrorKind::parameter, "invalid session id '" + std::string(id) + "'");
  return root_ / "sessions" / std::string(id);
}

void SessionStore::create(SessionRecord& record, std::string_view manifest, std::string_view frames) {
  const auto d = dir(record.id);
  std::lock_guard lock(create_mutex_);
  std::error_code ec;
  if (!fs::create_directory(d, ec)) {
    if (ec) fail(ErrorKind::io, "cannot create " + d.string() + ": " + ec.message());
    fail(ErrorKind::conflict, "session '" + record.id + "' already exists");
  }
  if (record.created_at.empty()) record.created_at = utc_now();
  record.manifest_path = (d / "manifest.json").string();
  record.feature_path = (d / "frames.ndjson").string();
  atomic_write(d / "manifest.json", manifest);
  atomic_write(d / "frames.ndjson", frames);
  save(record);
}

bool SessionStore::exists(std::string_view id) const {
  return valid_session_id(id) && fs::exists(dir(id) / "session.json");
}

SessionRecord SessionStore::load(std::string_view id) const {
  if (!exists(id)) fail(ErrorKind::not_found, "no session '" + std::string(id) + "'");
  return parse_session(read_file(dir(id) / "session.json"));
}

std::vector<SessionRecord> SessionStore::list() const {
  std::vector<SessionRecord> out;
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (!entry.is_directory()) continue;
    const auto id = entry.path().filename().string();
    if (!exists(id)) continue;
    out.push_back(load(id));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  });
  return out;
}

void SessionStore::save(const SessionRecord& record) const { atomic_write(dir(record.id) / "session.json", render_session(record)); }

std::string SessionStore::manifest(std::string_view id) const { return read_file(dir(id) / "manifest.json"); }

std::string SessionStore::frames(std::string_view id) const { return read_file(dir(id) / "frames.ndjson"); }

void SessionStore::put_results(std::string_view id, std::string_view series_snapshot, std::string_view report) const {
  atomic_write(dir(id) / "series.json", series_snapshot);
  atomic_write(dir(id) / "report.json", report);
}

std::optional<std::string> SessionStore::series(std::string_view id) const {
  const auto p = dir(id) / "series.json";
  if (!fs::exists(p)) return std::nullopt;
  return read_file(p);
}

}  // namespace cuescope
