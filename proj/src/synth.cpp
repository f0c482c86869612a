#include "cuescope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"

namespace cuescope {

std::string_view to_string(AnomalyKind k) noexcept {
  switch (k) {
    case AnomalyKind::mean_shift: return "mean_shift";
    case AnomalyKind::variance_burst: return "variance_burst";
    case AnomalyKind::freeze: return "freeze";
  }
  return "mean_shift";
}

AnomalyKind parse_anomaly_kind(std::string_view s) {
  if (s == "mean_shift") return AnomalyKind::mean_shift;
  if (s == "variance_burst") return AnomalyKind::variance_burst;
  if (s == "freeze") return AnomalyKind::freeze;
  fail(ErrorKind::parameter, "unknown anomaly kind '" + std::string(s) + "'");
}

std::string render_annotations(const AnnotationSet& set) {
  JsonWriter w;
  w.begin_object();
  w.key("session").value(set.session_id);
  w.key("duration_s").shortest(set.duration_s);
  w.key("annotations").begin_array();
  for (const auto& a : set.intervals) {
    w.begin_object();
    w.key("start_s").shortest(a.start_s);
    w.key("end_s").shortest(a.end_s);
    if (!a.modality.empty()) w.key("modality").value(a.modality);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

AnnotationSet parse_annotations(std::string_view document) {
  try {
    const auto doc = nlohmann::json::parse(document);
    AnnotationSet set;
    set.session_id = doc.value("session", std::string());
    set.duration_s = doc.value("duration_s", 0.0);
    for (const auto& a : doc.at("annotations")) {
      Annotation ann;
      ann.start_s = a.at("start_s").get<double>();
      ann.end_s = a.at("end_s").get<double>();
      ann.modality = a.value("modality", std::string());
      if (!(ann.start_s < ann.end_s)) fail(ErrorKind::validation, "annotation must have start_s < end_s");
      if (set.duration_s > 0.0 && (ann.start_s < 0.0 || ann.end_s > set.duration_s + 1e-9))
        fail(ErrorKind::validation, "annotation lies outside the stream duration");
      set.intervals.push_back(std::move(ann));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("annotations: ") + e.what());
  }
}

SyntheticSession generate_stream(const ModalityLayout& layout, double duration_s, std::uint64_t seed,
                                 std::span<const AnomalySpec> specs, std::string_view session_id) {
  if (!(duration_s > 0.0)) fail(ErrorKind::parameter, "duration must be positive");
  std::vector<AnomalySpec> sorted(specs.begin(), specs.end());
  for (const auto& s : sorted) {
    if (!(s.start_s < s.end_s)) fail(ErrorKind::validation, "anomaly must have start_s < end_s");
    if (!(s.magnitude > 0.0)) fail(ErrorKind::validation, "anomaly magnitude must be positive");
    if (s.start_s < 0.0 || s.end_s > duration_s) fail(ErrorKind::validation, "anomaly lies outside the stream");
    if (!layout.find(s.target_modality)) fail(ErrorKind::validation, "anomaly targets unknown modality '" + s.target_modality + "'");
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start_s < sorted[i - 1].end_s) fail(ErrorKind::validation, "anomaly specs overlap");
  }

  const double fps = layout.fps();
  const auto n_frames = static_cast<std::size_t>(std::llround(duration_s * fps));
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  const double innovation = std::sqrt(1.0 - kBaselineAr * kBaselineAr);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);

  SyntheticSession out;
  out.stream.layout = layout;
  out.stream.meta.session_id = std::string(session_id);
  out.stream.meta.source = "synthetic seed " + std::to_string(seed);
  out.stream.frames.reserve(n_frames);
  out.annotations.session_id = std::string(session_id);
  out.annotations.duration_s = static_cast<double>(n_frames) / fps;

  Eigen::VectorXd ar(d);
  for (auto& v : ar) v = z(rng);
  Eigen::VectorXd frozen(d);
  std::size_t next_spec = 0;
  const AnomalySpec* active = nullptr;

  for (std::size_t i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) / fps;
    if (i > 0) {
      for (auto& v : ar) v = kBaselineAr * v + innovation * z(rng);
    }
    if (active && t >= active->end_s) active = nullptr;
    bool entering = false;
    if (!active && next_spec < sorted.size() && t >= sorted[next_spec].start_s) {
      active = &sorted[next_spec++];
      entering = true;
    }

    FeatureFrame f;
    f.index = i;
    f.timestamp_s = t;
    f.values = ar;
    if (active) {
      const auto& mod = layout.at(active->target_modality);
      auto slice = f.values.segment(static_cast<Eigen::Index>(mod.offset), static_cast<Eigen::Index>(mod.dim));
      switch (active->kind) {
        case AnomalyKind::mean_shift:
          slice.array() += active->magnitude;
          break;
        case AnomalyKind::variance_burst:
          slice *= active->magnitude;
          break;
        case AnomalyKind::freeze:
          if (entering) frozen = f.values;
          slice = frozen.segment(static_cast<Eigen::Index>(mod.offset), static_cast<Eigen::Index>(mod.dim));
          break;
      }
    }
    out.stream.frames.push_back(std::move(f));
  }

  for (const auto& s : sorted) out.annotations.intervals.push_back({s.start_s, s.end_s, s.target_modality});
  return out;
}

std::vector<AnomalySpec> plan_anomalies(const SuiteSpec& suite, std::uint64_t seed) {
  const auto n_windows = static_cast<std::size_t>(std::floor(suite.duration_s / suite.window_s + 1e-9));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> candidates;
  for (std::size_t w = 1; w < n_windows; ++w) candidates.push_back(w);
  std::vector<std::size_t> chosen;
  // Random draws with neighbours removed; retry on the rare dead end.
  for (int attempt = 0; attempt < 1000 && chosen.size() < suite.anomalies; ++attempt) {
    chosen.clear();
    auto pool = candidates;
    while (chosen.size() < suite.anomalies && !pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const auto w = pool[pick(rng)];
      chosen.push_back(w);
      std::erase_if(pool, [w](std::size_t c) { return c + 1 >= w && c <= w + 1; });
    }
  }
  if (chosen.size() < suite.anomalies) {
    fail(ErrorKind::validation, "cannot place " + std::to_string(suite.anomalies) + " non-adjacent anomalies in " +
                                    std::to_string(n_windows) + " windows");
  }
  std::sort(chosen.begin(), chosen.end());

  std::uniform_int_distribution<std::size_t> modality(0, suite.layout.size() - 1);
  std::vector<AnomalySpec> specs;
  for (auto w : chosen) {
    AnomalySpec s;
    s.start_s = static_cast<double>(w) * suite.window_s;
    s.end_s = static_cast<double>(w + 1) * suite.window_s;
    s.target_modality = suite.layout.modalities()[modality(rng)].name;
    s.kind = suite.kind;
    s.magnitude = suite.magnitude;
    specs.push_back(std::move(s));
  }
  return specs;
}

SynthSpec parse_synth_spec(std::string_view document) {
  SynthSpec spec;
  auto& su = spec.suite;
  try {
    const auto doc = nlohmann::json::parse(document);
    if (!doc.is_object()) fail(ErrorKind::schema, "synth spec: expected an object");
    su.duration_s = doc.value("duration_s", su.duration_s);
    su.window_s = doc.value("window_s", su.window_s);
    su.magnitude = doc.value("magnitude", su.magnitude);
    if (doc.contains("kind")) su.kind = parse_anomaly_kind(doc["kind"].get<std::string>());
    const double fps = doc.value("fps", su.layout.fps());
    if (doc.contains("modalities")) {
      std::vector<std::pair<std::string, std::size_t>> dims;
      for (const auto& m : doc["modalities"]) dims.emplace_back(m.at("name").get<std::string>(), m.at("dim").get<std::size_t>());
      su.layout = ModalityLayout(dims, fps);
    } else if (fps != su.layout.fps()) {
      su.layout = default_layout(fps);
    }
    if (doc.contains("anomalies")) {
      const auto& a = doc["anomalies"];
      if (a.is_number_unsigned()) {
        su.anomalies = a.get<std::size_t>();
      } else if (a.is_array()) {
        std::vector<AnomalySpec> list;
        for (const auto& e : a) {
          AnomalySpec s;
          s.start_s = e.at("start_s").get<double>();
          s.end_s = e.at("end_s").get<double>();
          s.target_modality = e.at("modality").get<std::string>();
          s.kind = e.contains("kind") ? parse_anomaly_kind(e["kind"].get<std::string>()) : su.kind;
          s.magnitude = e.value("magnitude", su.magnitude);
          list.push_back(std::move(s));
        }
        su.anomalies = list.size();
        spec.anomalies = std::move(list);
      } else {
        fail(ErrorKind::schema, "synth spec: 'anomalies' must be a count or a list");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("synth spec: ") + e.what());
  }
  if (!(su.duration_s > 0.0) || !(su.window_s > 0.0)) fail(ErrorKind::parameter, "synth spec: durations must be positive");
  return spec;
}

std::vector<AnomalySpec> anomalies_for(const SynthSpec& spec, std::uint64_t seed) {
  return spec.anomalies ? *spec.anomalies : plan_anomalies(spec.suite, seed);
}

AgreementMetrics recall_at_k(const SceneReport& report, const AnnotationSet& annotations,
                             std::optional<double> min_overlap) {
  if (min_overlap && !(*min_overlap > 0.0 && *min_overlap <= 1.0))
    fail(ErrorKind::parameter, "overlap fraction must lie in (0,1]");
  AgreementMetrics m;
  m.annotations = annotations.intervals.size();
  for (const auto& a : annotations.intervals) {
    const Scene* best = nullptr;
    for (const auto& s : report.scenes) {
      const double overlap = std::min(a.end_s, s.end_s) - std::max(a.start_s, s.start_s);
      if (overlap <= 0.0) continue;
      if (min_overlap && overlap < *min_overlap * (a.end_s - a.start_s)) continue;
      if (!best || s.rank < best->rank) best = &s;
    }
    if (!best) continue;
    ++m.matched;
    if (!a.modality.empty()) {
      ++m.labelled_matched;
      if (best->top_modality == a.modality) ++m.attribution_hits;
    }
  }
  if (m.annotations > 0) m.recall_at_k = static_cast<double>(m.matched) / static_cast<double>(m.annotations);
  if (m.labelled_matched > 0)
    m.attribution_accuracy = static_cast<double>(m.attribution_hits) / static_cast<double>(m.labelled_matched);
  return m;
}

SceneReport truncate_report(const SceneReport& report, std::size_t k) {
  SceneReport out = report;
  out.k = k;
  if (out.scenes.size() > k) out.scenes.resize(k);
  return out;
}

SceneReport random_report(const ScoreSeries& series, std::size_t k, std::mt19937_64& rng) {
  ScoreSeries shuffled = series;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& w : shuffled.windows) w.outlierness = u(rng);
  return select_top_k(shuffled, static_cast<long long>(k));
}

BenchmarkRow run_trial(const BenchmarkCell& cell, std::uint64_t seed) {
  const auto specs = plan_anomalies(cell.suite, seed);
  const auto session = generate_stream(cell.suite.layout, cell.suite.duration_s, seed, specs,
                                       cell.name + "-" + std::to_string(seed));
  PipelineOptions options = cell.pipeline;
  options.scoring.gmm.seed = seed;
  options.scoring.window_s = cell.suite.window_s;
  const auto analysis = analyze_stream(session.stream, options);
  const auto top15 = select_top_k(analysis.series, 15);
  const auto at10 = recall_at_k(truncate_report(top15, 10), session.annotations);
  const auto at15 = recall_at_k(top15, session.annotations);

  BenchmarkRow row;
  row.cell = cell.name;
  row.seed = seed;
  row.recall_at_10 = at10.recall_at_k.value_or(0.0);
  row.recall_at_15 = at15.recall_at_k.value_or(0.0);
  row.matched_at_10 = at10.matched;
  row.labelled_at_10 = at10.labelled_matched;
  row.attribution_hits_at_10 = at10.attribution_hits;
  return row;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

BenchmarkTable benchmark(std::span<const BenchmarkCell> grid, std::span<const std::uint64_t> seeds) {
  if (grid.empty()) fail(ErrorKind::parameter, "benchmark grid is empty");
  BenchmarkTable table;
  for (const auto& cell : grid) {
    std::vector<double> r10, r15;
    std::size_t hits = 0, labelled = 0;
    for (auto seed : seeds) {
      auto row = run_trial(cell, seed);
      r10.push_back(row.recall_at_10);
      r15.push_back(row.recall_at_15);
      hits += row.attribution_hits_at_10;
      labelled += row.labelled_at_10;
      table.rows.push_back(std::move(row));
    }
    BenchmarkSummary s;
    s.cell = cell.name;
    s.trials = seeds.size();
    std::tie(s.recall_at_10_mean, s.recall_at_10_sd) = mean_sd(r10);
    std::tie(s.recall_at_15_mean, s.recall_at_15_sd) = mean_sd(r15);
    if (labelled > 0) s.attribution_accuracy = static_cast<double>(hits) / static_cast<double>(labelled);
    table.summary.push_back(std::move(s));
  }
  return table;
}

std::string render_benchmark_csv(const BenchmarkTable& table) {
  std::string out = "cell,seed,recall_at_10,recall_at_15,matched_at_10,labelled_at_10,attribution_hits_at_10\n";
  for (const auto& r : table.rows) {
    out += r.cell + "," + std::to_string(r.seed) + "," + format_fixed(r.recall_at_10, 6) + "," +
           format_fixed(r.recall_at_15, 6) + "," + std::to_string(r.matched_at_10) + "," +
           std::to_string(r.labelled_at_10) + "," + std::to_string(r.attribution_hits_at_10) + "\n";
  }
  return out;
}

std::string render_benchmark_json(const BenchmarkTable& table) {
  JsonWriter w;
  w.begin_object();
  w.key("summary").begin_array();
  for (const auto& s : table.summary) {
    w.begin_object();
    w.key("cell").value(s.cell);
    w.key("trials").value(s.trials);
    w.key("recall_at_10_mean").fixed(s.recall_at_10_mean);
    w.key("recall_at_10_sd").fixed(s.recall_at_10_sd);
    w.key("recall_at_15_mean").fixed(s.recall_at_15_mean);
    w.key("recall_at_15_sd").fixed(s.recall_at_15_sd);
    w.key("attribution_accuracy");
    if (s.attribution_accuracy) {
      w.fixed(*s.attribution_accuracy);
    } else {
      w.null();
    }
    w.end_object();
  }
  w.end_array();
  w.key("rows").begin_array();
  for (const auto& r : table.rows) {
    w.begin_object();
    w.key("cell").value(r.cell);
    w.key("seed").value(static_cast<std::size_t>(r.seed));
    w.key("recall_at_10").fixed(r.recall_at_10);
    w.key("recall_at_15").fixed(r.recall_at_15);
    w.key("matched_at_10").value(r.matched_at_10);
    w.key("labelled_at_10").value(r.labelled_at_10);
    w.key("attribution_hits_at_10").value(r.attribution_hits_at_10);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

}  // namespace cuescope
