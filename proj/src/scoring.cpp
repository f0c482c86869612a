#include "cuescope/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"

namespace cuescope {

namespace {

// Tolerance for placing frames and window edges on the time grid.
constexpr double kGridSlack = 1e-9;

std::size_t window_of(double t, double window_s, std::size_t count) {
  const auto w = static_cast<std::size_t>(std::floor(t / window_s + kGridSlack));
  return std::min(w, count - 1);
}

}  // namespace

std::string_view to_string(Aggregation a) noexcept { return a == Aggregation::mean ? "mean" : "max"; }

std::string_view to_string(AttributionMode a) noexcept {
  return a == AttributionMode::per_dimension ? "per_dimension" : "raw";
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return Aggregation::mean;
  if (s == "max") return Aggregation::max;
  fail(ErrorKind::parameter, "unknown aggregation '" + std::string(s) + "'");
}

AttributionMode parse_attribution_mode(std::string_view s) {
  if (s == "per_dimension") return AttributionMode::per_dimension;
  if (s == "raw") return AttributionMode::raw;
  fail(ErrorKind::parameter, "unknown attribution mode '" + std::string(s) + "'");
}

std::size_t ScoreSeries::scored_count() const {
  return static_cast<std::size_t>(std::count_if(windows.begin(), windows.end(), [](const auto& w) { return !w.unscored; }));
}

FrameScore score_frame(const GmmState& state, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const ModalityLayout& layout) {
  if (static_cast<std::size_t>(x.size()) != layout.total_dim() || state.dim() != layout.total_dim())
    fail(ErrorKind::dimension, "frame, model and layout dimensions disagree");

  FrameScore out;
  out.score = -state.log_density(x);
  const auto& mods = layout.modalities();
  out.marginal.resize(mods.size());
  if (mods.size() == 1) {
    // Nothing remains once the only modality is dropped; the empty marginal has density 1.
    out.marginal[0] = 0.0;
    return out;
  }

  if (state.config().covariance == CovarianceType::diagonal) {
    // Diagonal components factor over dimensions, so each marginal is the
    // joint with that modality's per-dimension terms subtracted.
    const Eigen::MatrixXd terms = state.diagonal_log_terms(x);
    const Eigen::VectorXd log_w = state.weights().array().log().matrix();
    const Eigen::VectorXd total = terms.rowwise().sum();
    for (std::size_t m = 0; m < mods.size(); ++m) {
      const auto off = static_cast<Eigen::Index>(mods[m].offset);
      const auto dim = static_cast<Eigen::Index>(mods[m].dim);
      const Eigen::VectorXd rest = log_w + total - terms.middleCols(off, dim).rowwise().sum();
      out.marginal[m] = -log_sum_exp(rest);
    }
  } else {
    for (std::size_t m = 0; m < mods.size(); ++m) {
      const auto keep = layout.dims_without(m);
      const GmmState marginal = state.marginalize(keep);
      Eigen::VectorXd sub(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j) sub[static_cast<Eigen::Index>(j)] = x[static_cast<Eigen::Index>(keep[j])];
      out.marginal[m] = -marginal.log_density(sub);
    }
  }
  return out;
}

Attribution modality_contributions(std::span<const FrameScore> frames, const ModalityLayout& layout,
                                   AttributionMode mode) {
  if (frames.empty()) fail(ErrorKind::insufficient_data, "attribution needs at least one valid frame");
  const auto& mods = layout.modalities();
  const auto n = static_cast<double>(frames.size());

  double full = 0.0;
  std::vector<double> marg(mods.size(), 0.0);
  for (const auto& f : frames) {
    if (f.marginal.size() != mods.size()) fail(ErrorKind::dimension, "frame score does not match layout");
    full += f.score;
    for (std::size_t m = 0; m < mods.size(); ++m) marg[m] += f.marginal[m];
  }
  full /= n;

  Attribution out;
  out.contributions.resize(mods.size());
  double positive = 0.0;
  for (std::size_t m = 0; m < mods.size(); ++m) {
    double c = full - marg[m] / n;
    if (mode == AttributionMode::per_dimension) c /= static_cast<double>(mods[m].dim);
    out.contributions[m] = c;
    positive += std::max(c, 0.0);
  }

  out.importances.resize(mods.size());
  if (positive > 0.0) {
    for (std::size_t m = 0; m < mods.size(); ++m) out.importances[m] = 100.0 * std::max(out.contributions[m], 0.0) / positive;
  } else {
    out.degenerate = true;
    std::fill(out.importances.begin(), out.importances.end(), 100.0 / static_cast<double>(mods.size()));
  }
  return out;
}

Attribution modality_contributions(const GmmState& state_before, std::span<const FeatureFrame> frames,
                                   const ModalityLayout& layout, AttributionMode mode) {
  std::vector<FrameScore> scores;
  for (const auto& f : frames) {
    if (!f.valid) continue;
    scores.push_back(score_frame(state_before, f.values, layout));
    scores.back().frame = f.index;
  }
  return modality_contributions(scores, layout, mode);
}

std::size_t representative_frame(std::span<const FrameScore> frames) {
  if (frames.empty()) fail(ErrorKind::insufficient_data, "no valid frame to represent the window");
  const FrameScore* best = &frames[0];
  for (const auto& f : frames) {
    if (f.score > best->score || (f.score == best->score && f.frame < best->frame)) best = &f;
  }
  return best->frame;
}

std::size_t representative_frame(const GmmState& state_before, std::span<const FeatureFrame> frames) {
  std::vector<FrameScore> scores;
  for (const auto& f : frames) {
    if (!f.valid) continue;
    FrameScore s;
    s.frame = f.index;
    s.score = -state_before.log_density(f.values);
    scores.push_back(s);
  }
  return representative_frame(scores);
}

std::size_t window_count(double duration_s, double window_s) {
  if (!(window_s > 0.0)) fail(ErrorKind::parameter, "window length must be positive");
  if (!(duration_s > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration_s / window_s - kGridSlack));
}

void check_tiling(const ScoreSeries& series) {
  double edge = 0.0;
  for (std::size_t w = 0; w < series.windows.size(); ++w) {
    const auto& win = series.windows[w];
    if (win.window_index != w) fail(ErrorKind::data, "window " + std::to_string(w) + " carries index " + std::to_string(win.window_index));
    if (win.start_s != edge || !(win.end_s > win.start_s))
      fail(ErrorKind::data, "window " + std::to_string(w) + " does not continue the tiling");
    edge = win.end_s;
  }
  if (series.windows.empty() || edge != series.duration_s) fail(ErrorKind::data, "windows do not cover the stream duration");
}

ScoreSeries score_stream(const FeatureStream& stream, const ScoringOptions& options,
                         const FrameObserver& observer) {
  if (!stream.normalized) fail(ErrorKind::contract, "score_stream expects a normalized stream");
  if (!(options.window_s > 0.0)) fail(ErrorKind::parameter, "window length must be positive");
  if (!(options.min_coverage >= 0.0 && options.min_coverage <= 1.0))
    fail(ErrorKind::parameter, "min_coverage must lie in [0,1]");
  options.gmm.validate();

  const auto& layout = stream.layout;
  const double duration = stream.duration_s();
  if (duration + kGridSlack < 2.0 * options.window_s) {
    fail(ErrorKind::insufficient_data, "stream of " + std::to_string(duration) + " s is shorter than two " +
                                           std::to_string(options.window_s) + " s windows");
  }
  const std::size_t n_windows = window_count(duration, options.window_s);

  ScoreSeries series;
  series.session_id = stream.meta.session_id;
  series.layout = layout;
  series.options = options;
  series.duration_s = duration;
  series.windows.resize(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    auto& win = series.windows[w];
    win.window_index = w;
    win.start_s = static_cast<double>(w) * options.window_s;
    win.end_s = w + 1 == n_windows ? duration : static_cast<double>(w + 1) * options.window_s;
  }

  // Frames grouped per window (indices into stream.frames).
  std::vector<std::vector<std::size_t>> members(n_windows);
  for (std::size_t i = 0; i < stream.frames.size(); ++i)
    members[window_of(stream.frames[i].timestamp_s, options.window_s, n_windows)].push_back(i);

  std::vector<Eigen::VectorXd> warmup;
  std::size_t warm_taken = 0;
  const std::size_t warm_limit = options.gmm.init_frames == 0 ? members[0].size() : options.gmm.init_frames;
  std::vector<std::size_t> warm_rest;  // window-0 frames past the warm-up budget
  for (auto i : members[0]) {
    const auto& f = stream.frames[i];
    if (!f.valid) continue;
    if (warm_taken < warm_limit) {
      warmup.push_back(f.values);
      ++warm_taken;
    } else {
      warm_rest.push_back(i);
    }
  }
  if (warmup.size() < options.gmm.k) {
    fail(ErrorKind::insufficient_data, "first window has " + std::to_string(warmup.size()) +
                                           " valid frames, fewer than k=" + std::to_string(options.gmm.k));
  }
  GmmState state = GmmState::init(options.gmm, warmup);
  for (auto i : warm_rest) state.update(stream.frames[i].values);
  series.windows[0].total_frames = members[0].size();

  std::vector<FrameScore> scores;
  for (std::size_t w = 1; w < n_windows; ++w) {
    auto& win = series.windows[w];
    win.total_frames = members[w].size();
    scores.clear();
    for (auto i : members[w]) {
      const auto& f = stream.frames[i];
      if (!f.valid) continue;
      FrameScore s = score_frame(state, f.values, layout);
      s.frame = f.index;
      if (observer) observer(w, s);
      scores.push_back(std::move(s));
      state.update(f.values);
    }

    win.scored_frames = scores.size();
    const double coverage = win.total_frames ? static_cast<double>(scores.size()) / static_cast<double>(win.total_frames) : 0.0;
    if (scores.empty() || coverage < options.min_coverage) continue;

    win.unscored = false;
    if (options.aggregation == Aggregation::mean) {
      double sum = 0.0;
      for (const auto& s : scores) sum += s.score;
      win.outlierness = sum / static_cast<double>(scores.size());
    } else {
      win.outlierness = -std::numeric_limits<double>::infinity();
      for (const auto& s : scores) win.outlierness = std::max(win.outlierness, s.score);
    }
    auto attribution = modality_contributions(scores, layout, options.attribution);
    win.contributions = std::move(attribution.contributions);
    win.importances = std::move(attribution.importances);
    win.degenerate_attribution = attribution.degenerate;
    win.representative_frame = representative_frame(scores);
  }
  return series;
}

std::string render_trace_record(std::size_t window, const FrameScore& score, const ModalityLayout& layout) {
  nlohmann::ordered_json rec;
  rec["i"] = score.frame;
  rec["w"] = window;
  rec["s"] = score.score;
  nlohmann::ordered_json marg = nlohmann::ordered_json::object();
  for (std::size_t m = 0; m < layout.size(); ++m) marg[layout.modalities()[m].name] = score.marginal[m];
  rec["marg"] = std::move(marg);
  return rec.dump();
}

}  // namespace cuescope
