#include "cuescope/documents.hpp"

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"
#include "cuescope/report.hpp"

namespace cuescope {

using nlohmann::ordered_json;

void write_options(JsonWriter& w, const ScoringOptions& o) {
  w.begin_object();
  w.key("window_s").shortest(o.window_s);
  w.key("aggregation").value(to_string(o.aggregation));
  w.key("attribution").value(to_string(o.attribution));
  w.key("min_coverage").shortest(o.min_coverage);
  w.key("gmm").begin_object();
  w.key("k").value(o.gmm.k);
  w.key("discount_r").shortest(o.gmm.discount_r);
  w.key("schedule").value(to_string(o.gmm.schedule));
  w.key("covariance").value(to_string(o.gmm.covariance));
  w.key("reg_eps").shortest(o.gmm.reg_eps);
  w.key("smoothing_alpha").shortest(o.gmm.smoothing_alpha);
  w.key("seed").value(static_cast<std::size_t>(o.gmm.seed));
  w.key("init_frames").value(o.gmm.init_frames);
  w.end_object();
  w.end_object();
}

ScoringOptions parse_options(const ordered_json& doc) {
  ScoringOptions o;
  o.window_s = doc.at("window_s").get<double>();
  o.aggregation = parse_aggregation(doc.at("aggregation").get<std::string>());
  o.attribution = parse_attribution_mode(doc.at("attribution").get<std::string>());
  o.min_coverage = doc.at("min_coverage").get<double>();
  const auto& g = doc.at("gmm");
  o.gmm.k = g.at("k").get<std::size_t>();
  o.gmm.discount_r = g.at("discount_r").get<double>();
  o.gmm.schedule = parse_discount_schedule(g.at("schedule").get<std::string>());
  o.gmm.covariance = parse_covariance_type(g.at("covariance").get<std::string>());
  o.gmm.reg_eps = g.at("reg_eps").get<double>();
  o.gmm.smoothing_alpha = g.at("smoothing_alpha").get<double>();
  o.gmm.seed = g.at("seed").get<std::uint64_t>();
  o.gmm.init_frames = g.at("init_frames").get<std::size_t>();
  return o;
}

namespace {

void write_named(JsonWriter& w, const ModalityLayout& layout, const std::vector<double>& values, bool full_precision) {
  w.begin_object();
  for (std::size_t m = 0; m < values.size() && m < layout.size(); ++m) {
    w.key(layout.modalities()[m].name);
    if (full_precision) {
      w.shortest(values[m]);
    } else {
      w.fixed(values[m]);
    }
  }
  w.end_object();
}

void write_series(JsonWriter& w, const ScoreSeries& s, bool full) {
  auto real = [&](double v) -> JsonWriter& { return full ? w.shortest(v) : w.fixed(v); };
  w.begin_object();
  w.key("session").value(s.session_id);
  w.key("window_s");
  real(s.options.window_s);
  w.key("duration_s");
  real(s.duration_s);
  if (full) {
    w.key("fps").shortest(s.layout.fps());
  } else {
    w.key("generator").value(kGeneratorVersion);
  }
  w.key("modalities").begin_array();
  for (const auto& m : s.layout.modalities()) {
    w.begin_object();
    w.key("name").value(m.name);
    w.key("dim").value(m.dim);
    w.end_object();
  }
  w.end_array();
  w.key("config");
  write_options(w, s.options);
  w.key("windows").begin_array();
  for (const auto& win : s.windows) {
    w.begin_object();
    w.key("index").value(win.window_index);
    w.key("start_s");
    real(win.start_s);
    w.key("end_s");
    real(win.end_s);
    w.key("unscored").value(win.unscored);
    w.key("outlierness");
    if (win.unscored) {
      w.null();
    } else {
      real(win.outlierness);
    }
    w.key("representative_frame");
    if (win.unscored) {
      w.null();
    } else {
      w.value(win.representative_frame);
    }
    w.key("scored_frames").value(win.scored_frames);
    w.key("total_frames").value(win.total_frames);
    w.key("degenerate_attribution").value(win.degenerate_attribution);
    w.key("contributions");
    write_named(w, s.layout, win.contributions, full);
    w.key("importances");
    write_named(w, s.layout, win.importances, full);
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

}  // namespace

std::string render_series(const ScoreSeries& series) {
  JsonWriter w;
  write_series(w, series, false);
  return w.str();
}

std::string render_series_snapshot(const ScoreSeries& series) {
  JsonWriter w;
  write_series(w, series, true);
  return w.str();
}

ScoreSeries parse_series_snapshot(std::string_view document) {
  try {
    const auto doc = ordered_json::parse(document);
    ScoreSeries s;
    s.session_id = doc.at("session").get<std::string>();
    s.duration_s = doc.at("duration_s").get<double>();
    std::vector<std::pair<std::string, std::size_t>> dims;
    for (const auto& m : doc.at("modalities")) dims.emplace_back(m.at("name").get<std::string>(), m.at("dim").get<std::size_t>());
    s.layout = ModalityLayout(dims, doc.at("fps").get<double>());
    s.options = parse_options(doc.at("config"));
    auto named = [&](const ordered_json& obj) {
      std::vector<double> out;
      for (const auto& m : s.layout.modalities()) {
        if (obj.contains(m.name)) out.push_back(obj.at(m.name).get<double>());
      }
      return out;
    };
    for (const auto& w : doc.at("windows")) {
      WindowScore win;
      win.window_index = w.at("index").get<std::size_t>();
      win.start_s = w.at("start_s").get<double>();
      win.end_s = w.at("end_s").get<double>();
      win.unscored = w.at("unscored").get<bool>();
      if (!win.unscored) {
        win.outlierness = w.at("outlierness").get<double>();
        win.representative_frame = w.at("representative_frame").get<std::size_t>();
      }
      win.scored_frames = w.at("scored_frames").get<std::size_t>();
      win.total_frames = w.at("total_frames").get<std::size_t>();
      win.degenerate_attribution = w.at("degenerate_attribution").get<bool>();
      win.contributions = named(w.at("contributions"));
      win.importances = named(w.at("importances"));
      s.windows.push_back(std::move(win));
    }
    return s;
  } catch (const ordered_json::exception& e) {
    fail(ErrorKind::schema, std::string("score series: ") + e.what());
  }
}

}  // namespace cuescope
