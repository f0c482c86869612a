#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cuescope/pipeline.hpp"

namespace cuescope {

enum class SessionStatus { pending, scored, failed };
std::string_view to_string(SessionStatus s) noexcept;
SessionStatus parse_session_status(std::string_view s);

struct SessionRecord {
  std::string id;
  std::string title;
  std::string created_at;  // ISO 8601, UTC
  std::string feature_path;
  std::string manifest_path;
  std::optional<std::string> video_path;
  SessionStatus status = SessionStatus::pending;
  PipelineOptions config;
  std::string diagnostic;  // set when status is failed
};

// Public session document (also the on-disk session.json).
std::string render_session(const SessionRecord& record);
void write_session(JsonWriter& w, const SessionRecord& record);
SessionRecord parse_session(std::string_view document);

// Ids are 1-64 characters from [A-Za-z0-9._-], not starting with '.'.
bool valid_session_id(std::string_view id) noexcept;

// 16 hex digits of SHA-256 over the manifest, frames and config documents.
std::string content_id(std::string_view manifest, std::string_view frames, std::string_view config);

// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Directory-per-session store:
//   <root>/sessions/<id>/session.json
//                        manifest.json
//                        frames.ndjson
//                        series.json   (full-precision score series, once scored)
//                        report.json   (rendered default report, once scored)
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dir(std::string_view id) const;

  // Throws Error(conflict) when the id is taken.
  void create(SessionRecord& record, std::string_view manifest, std::string_view frames);
  bool exists(std::string_view id) const;
  // Throws Error(not_found).
  SessionRecord load(std::string_view id) const;
  // Sorted by created_at, then id.
  std::vector<SessionRecord> list() const;
  void save(const SessionRecord& record) const;

  std::string manifest(std::string_view id) const;
  std::string frames(std::string_view id) const;
  void put_results(std::string_view id, std::string_view series_snapshot, std::string_view report) const;
  std::optional<std::string> series(std::string_view id) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex create_mutex_;
};

}  // namespace cuescope
