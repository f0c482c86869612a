#include "cuescope/json_writer.hpp"
#include "cuescope/service.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

namespace cuescope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  JsonWriter w;
  w.begin_object();
  w.key("error").value(kind);
  w.key("message").value(message);
  w.end_object();
  res.status = status;
  res.set_content(w.str(), kJson);
}

void send_error(httplib::Response& res, const Error& e) { send_error(res, http_status(e.kind()), to_string(e.kind()), e.what()); }

// Runs a handler, translating library errors into JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

std::string text_field(const json& body, const char* name, bool required) {
  if (!body.contains(name) || body[name].is_null()) {
    if (required) fail(ErrorKind::parameter, std::string("request body needs '") + name + "'");
    return {};
  }
  if (!body[name].is_string()) fail(ErrorKind::parameter, std::string("'") + name + "' must be a string");
  return body[name].get<std::string>();
}

PipelineOptions config_field(const json& body) {
  if (!body.contains("config") || body["config"].is_null()) return {};
  if (!body["config"].is_object()) fail(ErrorKind::parameter, "'config' must be an object");
  try {
    return parse_pipeline_config(body["config"].dump());
  } catch (const Error& e) {
    fail(ErrorKind::parameter, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) fail(ErrorKind::parameter, "request body must be a JSON object");
  return body;
}

CreateRequest create_request(const httplib::Request& req) {
  const auto body = parse_body(req);
  CreateRequest r;
  if (auto id = text_field(body, "id", false); !id.empty()) r.id = id;
  r.title = text_field(body, "title", false);
  if (!body.contains("manifest")) fail(ErrorKind::parameter, "request body needs 'manifest'");
  if (body["manifest"].is_object()) {
    r.manifest = body["manifest"].dump();
  } else if (body["manifest"].is_string()) {
    r.manifest = body["manifest"].get<std::string>();
  } else {
    fail(ErrorKind::parameter, "'manifest' must be an object or a string");
  }
  r.frames = text_field(body, "frames", true);
  if (auto v = text_field(body, "video_path", false); !v.empty()) r.video_path = v;
  r.config = config_field(body);
  return r;
}

long long parse_k(const httplib::Request& req, std::size_t fallback) {
  if (!req.has_param("k")) return static_cast<long long>(fallback);
  const auto text = req.get_param_value("k");
  std::size_t used = 0;
  long long k = 0;
  try {
    k = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) fail(ErrorKind::parameter, "k must be an integer, got '" + text + "'");
  return k;
}

std::string media_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".mov") return "video/quicktime";
  if (ext == ".mkv") return "video/x-matroska";
  return "application/octet-stream";
}

}  // namespace

struct ApiServer::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) {}
};

ApiServer::ApiServer(SessionService& service, const ServiceConfig& config) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  auto& svc = impl_->service;

  if (config.static_dir && !svr.set_mount_point("/", config.static_dir->string()))
    fail(ErrorKind::io, "static directory " + config.static_dir->string() + " does not exist");

  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("{\n  \"status\": \"ok\"\n}\n", kJson); });

  svr.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto record = svc.create(create_request(req));
             res.status = record.status == SessionStatus::failed ? 422 : 201;
             res.set_header("Location", "/sessions/" + record.id);
             res.set_content(render_session(record), kJson);
           }));

  svr.Get("/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            JsonWriter w;
            w.begin_object();
            w.key("sessions").begin_array();
            for (const auto& r : svc.list()) write_session(w, r);
            w.end_array();
            w.end_object();
            res.set_content(w.str(), kJson);
          }));

  svr.Get(R"(/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            res.set_content(render_session(svc.get(req.matches[1].str())), kJson);
          }));

  svr.Get(R"(/sessions/([^/]+)/scores)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            res.set_content(svc.scores_document(req.matches[1].str()), kJson);
          }));

  svr.Get(R"(/sessions/([^/]+)/scenes)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto k = parse_k(req, svc.default_k());
            res.set_content(svc.scenes_document(req.matches[1].str(), k), kJson);
          }));

  svr.Post(R"(/sessions/([^/]+)/rescore)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             std::optional<PipelineOptions> config;
             if (!req.body.empty()) config = config_field(parse_body(req));
             res.status = 202;
             res.set_content(render_session(svc.rescore(req.matches[1].str(), config)), kJson);
           }));

  svr.Get(R"(/sessions/([^/]+)/video)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto path = svc.video(req.matches[1].str());
            const auto size = static_cast<std::size_t>(fs::file_size(path));
            res.set_header("Accept-Ranges", "bytes");
            // Range selection and 416 on unsatisfiable ranges are handled by
            // the server once the provider knows the full length.
            res.set_content_provider(size, media_type(path),
                                     [path](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                                       std::ifstream in(path, std::ios::binary);
                                       if (!in) return false;
                                       in.seekg(static_cast<std::streamoff>(offset));
                                       std::vector<char> buf(std::min<std::size_t>(length, 1 << 16));
                                       in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
                                       const auto got = static_cast<std::size_t>(in.gcount());
                                       if (got == 0) return false;
                                       return sink.write(buf.data(), got);
                                     });
          }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  const int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorKind::io, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::stop() { impl_->server.stop(); }

}  // namespace cuescope
