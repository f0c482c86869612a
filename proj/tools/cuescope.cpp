// cuescope command-line front end: offline analysis, the session service,
// synthetic data generation and evaluation against annotations.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cuescope/documents.hpp"
#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"
#include "cuescope/pipeline.hpp"
#include "cuescope/report.hpp"
#include "cuescope/service.hpp"
#include "cuescope/store.hpp"
#include "cuescope/synth.hpp"

namespace fs = std::filesystem;
using namespace cuescope;

namespace {

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  atomic_write(path, content);
}

struct AnalyzeArgs {
  std::string manifest, frames, video, out = "-", scores, trace, config, session;
  std::optional<double> window;
  long long top_k = 10;
  std::optional<std::uint64_t> seed;
};

int run_analyze(const AnalyzeArgs& a) {
  PipelineOptions options;
  if (!a.config.empty()) options = parse_pipeline_config(read_file(a.config));
  if (a.window) options.scoring.window_s = *a.window;
  if (a.seed) options.scoring.gmm.seed = *a.seed;
  if (!a.video.empty() && !fs::is_regular_file(a.video)) fail(ErrorKind::not_found, "video file " + a.video + " not found");

  std::ofstream trace;
  FrameObserver observer;
  const auto manifest = read_file(a.manifest);
  const auto layout = parse_manifest(manifest);
  if (!a.trace.empty()) {
    trace.open(a.trace, std::ios::trunc);
    if (!trace) fail(ErrorKind::io, "cannot open " + a.trace);
    observer = [&trace, &layout](std::size_t w, const FrameScore& s) { trace << render_trace_record(w, s, layout) << '\n'; };
  }
  const auto analysis = analyze_documents(manifest, read_file(a.frames), a.session, options, observer);
  const auto report = select_top_k(analysis.series, a.top_k);
  write_output(a.out, render_report(report));
  if (!a.scores.empty()) write_output(a.scores, render_series(analysis.series));
  std::fprintf(stderr, "%zu windows, %zu scored, %zu scenes reported\n", analysis.series.windows.size(),
               analysis.series.scored_count(), report.scenes.size());
  return 0;
}

struct ServeArgs {
  std::string config, data, static_dir;
  std::optional<int> port;
  std::optional<std::size_t> workers;
};

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeArgs& a) {
  ServiceConfig cfg;
  if (!a.config.empty()) cfg = parse_service_config(read_file(a.config));
  cfg = apply_env_overrides(cfg, process_env);
  if (a.port) cfg.port = *a.port;
  if (!a.data.empty()) cfg.data_dir = a.data;
  if (!a.static_dir.empty()) cfg.static_dir = a.static_dir;
  if (a.workers) cfg.workers = *a.workers;

  SessionService service(cfg.data_dir, cfg.workers, cfg.default_k);
  ApiServer server(service, cfg);
  const int port = server.bind(cfg.host, cfg.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "serving %s on http://%s:%d\n", cfg.data_dir.string().c_str(), cfg.host.c_str(), port);
  server.run();
  g_server = nullptr;
  return 0;
}

struct SynthArgs {
  std::string spec, out, session;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  const auto spec = a.spec.empty() ? SynthSpec{} : parse_synth_spec(read_file(a.spec));
  const auto session_id = a.session.empty() ? "synth-" + std::to_string(a.seed) : a.session;
  const auto anomalies = anomalies_for(spec, a.seed);
  const auto s = generate_stream(spec.suite.layout, spec.suite.duration_s, a.seed, anomalies, session_id);
  fs::create_directories(a.out);
  const fs::path dir = a.out;
  atomic_write(dir / "manifest.json", render_manifest(s.stream.layout, session_id));
  atomic_write(dir / "frames.ndjson", serialize_frames(s.stream));
  atomic_write(dir / "annotations.json", render_annotations(s.annotations));
  std::fprintf(stderr, "%zu frames, %zu anomalies written to %s\n", s.stream.frames.size(), anomalies.size(),
               a.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string report, annotations;
  std::optional<double> overlap;
  std::optional<std::size_t> k;
};

int run_eval(const EvalArgs& a) {
  auto report = parse_report(read_file(a.report));
  if (a.k) report = truncate_report(report, *a.k);
  const auto annotations = parse_annotations(read_file(a.annotations));
  const auto m = recall_at_k(report, annotations, a.overlap);
  JsonWriter w;
  w.begin_object();
  w.key("k").value(report.scenes.size());
  w.key("annotations").value(m.annotations);
  w.key("matched").value(m.matched);
  w.key("recall_at_k");
  if (m.recall_at_k) {
    w.fixed(*m.recall_at_k);
  } else {
    w.null();
  }
  w.key("labelled_matched").value(m.labelled_matched);
  w.key("attribution_hits").value(m.attribution_hits);
  w.key("attribution_accuracy");
  if (m.attribution_accuracy) {
    w.fixed(*m.attribution_accuracy);
  } else {
    w.null();
  }
  w.end_object();
  std::cout << w.str();
  return 0;
}

struct BenchArgs {
  std::string config, csv, json;
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  double magnitude = 4.0;
  std::string kind = "mean_shift";
};

int run_bench(const BenchArgs& a) {
  BenchmarkCell cell;
  cell.name = "standard";
  if (!a.config.empty()) cell.pipeline = parse_pipeline_config(read_file(a.config));
  cell.suite.magnitude = a.magnitude;
  cell.suite.kind = parse_anomaly_kind(a.kind);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(a.first_seed + i);
  const auto table = benchmark(std::span(&cell, 1), seeds);
  if (!a.csv.empty()) write_output(a.csv, render_benchmark_csv(table));
  const auto doc = render_benchmark_json(table);
  write_output(a.json.empty() ? "-" : a.json, doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cuescope: unsupervised anomaly scenes in multimodal behaviour streams"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "score a feature stream and write the top-k scene report");
  an->add_option("--manifest", analyze.manifest, "modality manifest (JSON)")->required()->check(CLI::ExistingFile);
  an->add_option("--frames", analyze.frames, "frame records (NDJSON)")->required()->check(CLI::ExistingFile);
  an->add_option("--video", analyze.video, "video file of the session");
  an->add_option("--window", analyze.window, "window length in seconds");
  an->add_option("--top-k", analyze.top_k, "number of scenes")->capture_default_str();
  an->add_option("--seed", analyze.seed, "model initialization seed");
  an->add_option("--config", analyze.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  an->add_option("--session", analyze.session, "session id (defaults to the manifest's)");
  an->add_option("--out", analyze.out, "report path, '-' for stdout")->capture_default_str();
  an->add_option("--scores", analyze.scores, "also write the per-window score series here");
  an->add_option("--trace", analyze.trace, "write per-frame scores (NDJSON) here");

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "run the session HTTP service");
  sv->add_option("--port", serve.port, "listening port (0 picks a free one)");
  sv->add_option("--data", serve.data, "data directory");
  sv->add_option("--config", serve.config, "service config (JSON)")->check(CLI::ExistingFile);
  sv->add_option("--static", serve.static_dir, "directory of UI assets served at /")->check(CLI::ExistingDirectory);
  sv->add_option("--workers", serve.workers, "scoring worker threads");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "generate a synthetic session with injected anomalies");
  sy->add_option("--spec", synth.spec, "synthetic suite spec (JSON)")->check(CLI::ExistingFile);
  sy->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  sy->add_option("--out", synth.out, "output directory")->required();
  sy->add_option("--session", synth.session, "session id");

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "recall@k and attribution accuracy of a report");
  ev->add_option("--report", eval.report, "scene report")->required()->check(CLI::ExistingFile);
  ev->add_option("--annotations", eval.annotations, "annotation document")->required()->check(CLI::ExistingFile);
  ev->add_option("--overlap", eval.overlap, "minimum overlap as a fraction of the annotation")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--k", eval.k, "evaluate only the first k scenes");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "run the synthetic detection benchmark");
  be->add_option("--config", bench.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  be->add_option("--seeds", bench.seeds, "number of trials")->capture_default_str();
  be->add_option("--first-seed", bench.first_seed, "seed of the first trial")->capture_default_str();
  be->add_option("--magnitude", bench.magnitude, "injection magnitude in baseline sd")->capture_default_str();
  be->add_option("--kind", bench.kind, "mean_shift, variance_burst or freeze")->capture_default_str();
  be->add_option("--csv", bench.csv, "per-trial table");
  be->add_option("--json", bench.json, "summary document (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*an) return run_analyze(analyze);
    if (*sv) return run_serve(serve);
    if (*sy) return run_synth(synth);
    if (*ev) return run_eval(eval);
    if (*be) return run_bench(bench);
  } catch (const Error& e) {
    std::fprintf(stderr, "cuescope: %s error: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cuescope: %s\n", e.what());
    return 2;
  }
  return 1;
}
