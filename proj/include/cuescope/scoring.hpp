#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cuescope/gmm.hpp"
#include "cuescope/ingest.hpp"
#include "cuescope/layout.hpp"

namespace cuescope {

enum class Aggregation { mean, max };
// per_dimension divides each modality's likelihood gap by its dimensionality.
enum class AttributionMode { per_dimension, raw };

std::string_view to_string(Aggregation a) noexcept;
std::string_view to_string(AttributionMode a) noexcept;
Aggregation parse_aggregation(std::string_view s);
AttributionMode parse_attribution_mode(std::string_view s);

struct ScoringOptions {
  GmmConfig gmm;
  double window_s = 15.0;
  Aggregation aggregation = Aggregation::mean;
  AttributionMode attribution = AttributionMode::per_dimension;
  // Windows whose valid-frame share falls below this are left unscored.
  double min_coverage = 0.5;

  bool operator==(const ScoringOptions&) const = default;
};

// Negative log-density of one frame under the full model and under the
// model with each modality marginalized out (layout order).
struct FrameScore {
  std::size_t frame = 0;
  double score = 0.0;
  std::vector<double> marginal;
};

struct Attribution {
  std::vector<double> contributions;  // layout order
  std::vector<double> importances;    // percentages, layout order
  bool degenerate = false;            // every contribution <= 0
};

struct WindowScore {
  std::size_t window_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double outlierness = 0.0;  // meaningless when unscored
  std::vector<double> contributions;
  std::vector<double> importances;
  std::size_t representative_frame = 0;
  std::size_t scored_frames = 0;
  std::size_t total_frames = 0;
  bool unscored = true;
  bool degenerate_attribution = false;

  bool operator==(const WindowScore&) const = default;
};

struct ScoreSeries {
  std::string session_id;
  ModalityLayout layout;
  ScoringOptions options;
  double duration_s = 0.0;
  std::vector<WindowScore> windows;

  std::size_t scored_count() const;
  bool operator==(const ScoreSeries&) const = default;
};

// Called once per scored frame with the window it falls in.
using FrameObserver = std::function<void(std::size_t window, const FrameScore&)>;

FrameScore score_frame(const GmmState& state, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const ModalityLayout& layout);

// Attribution from per-frame full and marginal scores of one window.
Attribution modality_contributions(std::span<const FrameScore> frames, const ModalityLayout& layout,
                                   AttributionMode mode = AttributionMode::per_dimension);
// Same, scoring every valid frame against one fixed model.
Attribution modality_contributions(const GmmState& state_before, std::span<const FeatureFrame> frames,
                                   const ModalityLayout& layout,
                                   AttributionMode mode = AttributionMode::per_dimension);

// Highest-scoring frame; ties go to the earliest index.
std::size_t representative_frame(std::span<const FrameScore> frames);
std::size_t representative_frame(const GmmState& state_before, std::span<const FeatureFrame> frames);

std::size_t window_count(double duration_s, double window_s);

// Throws Error(data) unless the windows are indexed 0..n-1 and tile
// [0, duration_s) edge to edge.
void check_tiling(const ScoreSeries& series);

// Initializes on window 0 (left unscored), then scores every later valid
// frame against the model before updating it with that frame.
ScoreSeries score_stream(const FeatureStream& stream, const ScoringOptions& options,
                         const FrameObserver& observer = {});

// Per-frame debug record: {"i", "w", "s", "marg": {name: value}}.
std::string render_trace_record(std::size_t window, const FrameScore& score, const ModalityLayout& layout);

}  // namespace cuescope
