#include "cuescope/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"

namespace cuescope {

using nlohmann::json;

PipelineOptions parse_pipeline_config(std::string_view document, PipelineOptions o) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::schema, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::schema, "config: expected an object");
  try {
    auto& s = o.scoring;
    s.window_s = doc.value("window_s", s.window_s);
    if (doc.contains("aggregation")) s.aggregation = parse_aggregation(doc["aggregation"].get<std::string>());
    if (doc.contains("attribution")) s.attribution = parse_attribution_mode(doc["attribution"].get<std::string>());
    s.min_coverage = doc.value("min_coverage", s.min_coverage);
    if (doc.contains("gmm")) {
      const auto& g = doc["gmm"];
      s.gmm.k = g.value("k", s.gmm.k);
      s.gmm.discount_r = g.value("discount_r", s.gmm.discount_r);
      if (g.contains("schedule")) s.gmm.schedule = parse_discount_schedule(g["schedule"].get<std::string>());
      if (g.contains("covariance")) s.gmm.covariance = parse_covariance_type(g["covariance"].get<std::string>());
      s.gmm.reg_eps = g.value("reg_eps", s.gmm.reg_eps);
      s.gmm.smoothing_alpha = g.value("smoothing_alpha", s.gmm.smoothing_alpha);
      s.gmm.seed = g.value("seed", s.gmm.seed);
      s.gmm.init_frames = g.value("init_frames", s.gmm.init_frames);
    }
    if (doc.contains("impute")) {
      const auto& i = doc["impute"];
      o.impute.confidence_threshold = i.value("confidence_threshold", o.impute.confidence_threshold);
      o.impute.max_gap_s = i.value("max_gap_s", o.impute.max_gap_s);
    }
    if (doc.contains("normalize")) {
      const auto& n = doc["normalize"];
      if (n.contains("mode")) {
        const auto mode = n["mode"].get<std::string>();
        if (mode == "two_pass") {
          o.norm.mode = NormMode::two_pass;
        } else if (mode == "streaming") {
          o.norm.mode = NormMode::streaming;
        } else {
          fail(ErrorKind::parameter, "config: unknown normalize mode '" + mode + "'");
        }
      }
      o.norm.std_floor = n.value("std_floor", o.norm.std_floor);
      o.norm.streaming_rate = n.value("streaming_rate", o.norm.streaming_rate);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, std::string("config: ") + e.what());
  }
  o.scoring.gmm.validate();
  return o;
}

std::string render_pipeline_config(const PipelineOptions& o) {
  JsonWriter w;
  write_pipeline_config(w, o);
  return w.str();
}

void write_pipeline_config(JsonWriter& w, const PipelineOptions& o) {
  const auto& s = o.scoring;
  w.begin_object();
  w.key("window_s").shortest(s.window_s);
  w.key("aggregation").value(to_string(s.aggregation));
  w.key("attribution").value(to_string(s.attribution));
  w.key("min_coverage").shortest(s.min_coverage);
  w.key("gmm").begin_object();
  w.key("k").value(s.gmm.k);
  w.key("discount_r").shortest(s.gmm.discount_r);
  w.key("schedule").value(to_string(s.gmm.schedule));
  w.key("covariance").value(to_string(s.gmm.covariance));
  w.key("reg_eps").shortest(s.gmm.reg_eps);
  w.key("smoothing_alpha").shortest(s.gmm.smoothing_alpha);
  w.key("seed").value(static_cast<std::size_t>(s.gmm.seed));
  w.key("init_frames").value(s.gmm.init_frames);
  w.end_object();
  w.key("impute").begin_object();
  w.key("confidence_threshold").shortest(o.impute.confidence_threshold);
  w.key("max_gap_s").shortest(o.impute.max_gap_s);
  w.end_object();
  w.key("normalize").begin_object();
  w.key("mode").value(o.norm.mode == NormMode::two_pass ? "two_pass" : "streaming");
  w.key("std_floor").shortest(o.norm.std_floor);
  w.key("streaming_rate").shortest(o.norm.streaming_rate);
  w.end_object();
  w.end_object();
}

Analysis analyze_stream(const FeatureStream& raw, const PipelineOptions& options, const FrameObserver& observer) {
  Analysis out;
  out.stream = normalize(impute_missing(raw, options.impute), options.norm).first;
  out.series = score_stream(out.stream, options.scoring, observer);
  return out;
}

Analysis analyze_documents(std::string_view manifest, std::string_view frames, std::string_view session_id,
                           const PipelineOptions& options, const FrameObserver& observer) {
  const auto layout = parse_manifest(manifest);
  auto stream = parse_frames(frames, layout);
  stream.meta.session_id = session_id.empty() ? manifest_session(manifest) : std::string(session_id);
  return analyze_stream(stream, options, observer);
}

}  // namespace cuescope
