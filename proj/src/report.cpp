#include "cuescope/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cuescope/documents.hpp"
#include "cuescope/error.hpp"
#include "cuescope/json_writer.hpp"

namespace cuescope {

using nlohmann::ordered_json;

std::string_view to_string(Tier t) noexcept { return t == Tier::dark ? "dark" : "light"; }

Tier tier_for_rank(std::size_t rank) noexcept { return rank <= 3 ? Tier::dark : Tier::light; }

SceneReport select_top_k(const ScoreSeries& series, long long k) {
  if (k <= 0) fail(ErrorKind::parameter, "k must be a positive integer");
  std::vector<const WindowScore*> scored;
  for (const auto& w : series.windows) {
    if (!w.unscored) scored.push_back(&w);
  }
  if (scored.empty()) fail(ErrorKind::insufficient_data, "series has no scored window");

  std::stable_sort(scored.begin(), scored.end(), [](const WindowScore* a, const WindowScore* b) {
    if (a->outlierness != b->outlierness) return a->outlierness > b->outlierness;
    return a->start_s < b->start_s;
  });

  SceneReport report;
  report.session_id = series.session_id;
  report.k = static_cast<std::size_t>(k);
  report.window_s = series.options.window_s;
  report.duration_s = series.duration_s;
  report.options = series.options;

  const auto n = std::min(scored.size(), report.k);
  const auto& mods = series.layout.modalities();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& w = *scored[r];
    Scene scene;
    scene.rank = r + 1;
    scene.window_index = w.window_index;
    scene.start_s = w.start_s;
    scene.end_s = w.end_s;
    scene.outlierness = w.outlierness;
    scene.representative_frame = w.representative_frame;
    scene.tier = tier_for_rank(scene.rank);
    scene.degenerate_attribution = w.degenerate_attribution;
    std::size_t top = 0;
    for (std::size_t m = 0; m < mods.size(); ++m) {
      scene.importances.emplace_back(mods[m].name, w.importances.at(m));
      if (w.importances[m] > w.importances[top]) top = m;
    }
    scene.top_modality = mods[top].name;
    report.scenes.push_back(std::move(scene));
  }
  return report;
}

std::vector<long long> largest_remainder_units(std::span<const double> percentages, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const auto target = static_cast<long long>(std::llround(100.0 * scale));
  std::vector<long long> units(percentages.size());
  std::vector<double> remainder(percentages.size());
  long long assigned = 0;
  for (std::size_t i = 0; i < percentages.size(); ++i) {
    const double scaled = std::max(percentages[i], 0.0) * scale;
    // values already on the grid (up to rounding noise) stay where they are
    const double snapped = std::abs(scaled - std::round(scaled)) < 1e-6 ? std::round(scaled) : scaled;
    units[i] = static_cast<long long>(std::floor(snapped));
    remainder[i] = snapped - static_cast<double>(units[i]);
    assigned += units[i];
  }
  std::vector<std::size_t> order(percentages.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t j = 0; assigned < target && !order.empty(); j = (j + 1) % order.size()) {
    ++units[order[j]];
    ++assigned;
  }
  // Trimming only happens when the inputs sum above 100.
  for (std::size_t j = order.size(); assigned > target;) {
    j = j == 0 ? order.size() - 1 : j - 1;
    if (units[order[j]] > 0) {
      --units[order[j]];
      --assigned;
    }
  }
  return units;
}

std::string render_report(const SceneReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("session").value(report.session_id);
  w.key("k").value(report.k);
  w.key("window_s").fixed(report.window_s);
  w.key("duration_s").fixed(report.duration_s);
  w.key("generator").value(report.generator);
  w.key("config");
  write_options(w, report.options);
  w.key("scenes").begin_array();
  for (const auto& s : report.scenes) {
    w.begin_object();
    w.key("rank").value(s.rank);
    w.key("window_index").value(s.window_index);
    w.key("start_s").fixed(s.start_s);
    w.key("end_s").fixed(s.end_s);
    w.key("outlierness").fixed(s.outlierness);
    w.key("tier").value(to_string(s.tier));
    w.key("representative_frame").value(s.representative_frame);
    w.key("top_modality").value(s.top_modality);
    w.key("degenerate_attribution").value(s.degenerate_attribution);
    std::vector<double> shares;
    for (const auto& [name, pct] : s.importances) shares.push_back(pct);
    const auto units = largest_remainder_units(shares, 1);
    w.key("importances").begin_object();
    for (std::size_t m = 0; m < s.importances.size(); ++m) {
      w.key(s.importances[m].first).fixed(static_cast<double>(units[m]) / 10.0, 1);
    }
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

SceneReport parse_report(std::string_view document) {
  try {
    const auto doc = ordered_json::parse(document);
    SceneReport r;
    r.session_id = doc.at("session").get<std::string>();
    r.k = doc.at("k").get<std::size_t>();
    r.window_s = doc.at("window_s").get<double>();
    r.duration_s = doc.at("duration_s").get<double>();
    r.generator = doc.at("generator").get<std::string>();
    r.options = parse_options(doc.at("config"));
    for (const auto& s : doc.at("scenes")) {
      Scene scene;
      scene.rank = s.at("rank").get<std::size_t>();
      scene.window_index = s.at("window_index").get<std::size_t>();
      scene.start_s = s.at("start_s").get<double>();
      scene.end_s = s.at("end_s").get<double>();
      scene.outlierness = s.at("outlierness").get<double>();
      const auto tier = s.at("tier").get<std::string>();
      if (tier != "dark" && tier != "light") fail(ErrorKind::schema, "report: unknown tier '" + tier + "'");
      scene.tier = tier == "dark" ? Tier::dark : Tier::light;
      scene.representative_frame = s.at("representative_frame").get<std::size_t>();
      scene.top_modality = s.at("top_modality").get<std::string>();
      scene.degenerate_attribution = s.at("degenerate_attribution").get<bool>();
      for (const auto& [name, pct] : s.at("importances").items()) scene.importances.emplace_back(name, pct.get<double>());
      r.scenes.push_back(std::move(scene));
    }
    return r;
  } catch (const ordered_json::exception& e) {
    fail(ErrorKind::schema, std::string("report: ") + e.what());
  }
}

}  // namespace cuescope
