#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cuescope/ingest.hpp"
#include "cuescope/layout.hpp"
#include "cuescope/pipeline.hpp"
#include "cuescope/report.hpp"

namespace cuescope {

enum class AnomalyKind { mean_shift, variance_burst, freeze };
std::string_view to_string(AnomalyKind k) noexcept;
AnomalyKind parse_anomaly_kind(std::string_view s);

struct AnomalySpec {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string target_modality;
  AnomalyKind kind = AnomalyKind::mean_shift;
  double magnitude = 1.0;  // in units of the baseline standard deviation
};

struct Annotation {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string modality;  // empty when unlabelled

  bool operator==(const Annotation&) const = default;
};

struct AnnotationSet {
  std::string session_id;
  double duration_s = 0.0;
  std::vector<Annotation> intervals;
};

std::string render_annotations(const AnnotationSet& set);
AnnotationSet parse_annotations(std::string_view document);

struct SyntheticSession {
  FeatureStream stream;
  AnnotationSet annotations;
};

inline constexpr double kBaselineAr = 0.9;

// Per-dimension AR(1) noise with coefficient 0.9 and unit stationary
// variance, with each spec injected into its modality's dimensions over
// [start_s, end_s). Throws Error(validation) for overlapping or malformed specs.
SyntheticSession generate_stream(const ModalityLayout& layout, double duration_s, std::uint64_t seed,
                                 std::span<const AnomalySpec> specs, std::string_view session_id = {});

struct SuiteSpec {
  ModalityLayout layout = default_layout();
  double duration_s = 600.0;
  double window_s = 15.0;
  std::size_t anomalies = 10;
  double magnitude = 4.0;
  AnomalyKind kind = AnomalyKind::mean_shift;
};

// `anomalies` window-aligned injections on distinct, pairwise non-adjacent
// windows after the warm-up window, each on a uniformly drawn modality.
std::vector<AnomalySpec> plan_anomalies(const SuiteSpec& suite, std::uint64_t seed);

// Spec file for the synth command: {"duration_s", "window_s", "fps",
// "modalities": [{"name", "dim"}], "anomalies": count or [{"start_s",
// "end_s", "modality", "kind", "magnitude"}], "magnitude", "kind"}.
// Every key is optional; defaults give the standard suite.
struct SynthSpec {
  SuiteSpec suite;
  std::optional<std::vector<AnomalySpec>> anomalies;  // explicit list instead of a seeded plan
};
SynthSpec parse_synth_spec(std::string_view document);
std::vector<AnomalySpec> anomalies_for(const SynthSpec& spec, std::uint64_t seed);

struct AgreementMetrics {
  std::size_t annotations = 0;
  std::size_t matched = 0;
  std::optional<double> recall_at_k;  // empty when there are no annotations
  std::size_t labelled_matched = 0;
  std::size_t attribution_hits = 0;
  std::optional<double> attribution_accuracy;  // empty when no matched annotation is labelled
};

// An annotation counts as matched when some scene overlaps it by a positive
// amount and, when `min_overlap` is set, by at least that fraction of the
// annotation's length. Attribution is judged against the best-ranked
// matching scene.
AgreementMetrics recall_at_k(const SceneReport& report, const AnnotationSet& annotations,
                             std::optional<double> min_overlap = std::nullopt);

// The first k scenes of a report.
SceneReport truncate_report(const SceneReport& report, std::size_t k);

// k scored windows drawn uniformly without replacement, packaged as a report;
// the permutation baseline for recall.
SceneReport random_report(const ScoreSeries& series, std::size_t k, std::mt19937_64& rng);

struct BenchmarkCell {
  std::string name;
  PipelineOptions pipeline;
  SuiteSpec suite;
};

struct BenchmarkRow {
  std::string cell;
  std::uint64_t seed = 0;
  double recall_at_10 = 0.0;
  double recall_at_15 = 0.0;
  std::size_t matched_at_10 = 0;
  std::size_t labelled_at_10 = 0;
  std::size_t attribution_hits_at_10 = 0;
};

struct BenchmarkSummary {
  std::string cell;
  std::size_t trials = 0;
  double recall_at_10_mean = 0.0;
  double recall_at_10_sd = 0.0;
  double recall_at_15_mean = 0.0;
  double recall_at_15_sd = 0.0;
  // pooled over trials: hits / labelled matched annotations at k = 10
  std::optional<double> attribution_accuracy;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkSummary> summary;
};

BenchmarkRow run_trial(const BenchmarkCell& cell, std::uint64_t seed);
BenchmarkTable benchmark(std::span<const BenchmarkCell> grid, std::span<const std::uint64_t> seeds);
std::string render_benchmark_csv(const BenchmarkTable& table);
std::string render_benchmark_json(const BenchmarkTable& table);

}  // namespace cuescope
