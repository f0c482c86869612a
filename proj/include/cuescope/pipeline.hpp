#pragma once

#include <string>
#include <string_view>

#include "cuescope/ingest.hpp"
#include "cuescope/json_writer.hpp"
#include "cuescope/scoring.hpp"

namespace cuescope {

struct PipelineOptions {
  ScoringOptions scoring;
  ImputePolicy impute;
  NormOptions norm;

  bool operator==(const PipelineOptions&) const = default;
};

// Optional JSON config file: {"window_s", "aggregation", "attribution",
// "min_coverage", "gmm": {...}, "impute": {"confidence_threshold",
// "max_gap_s"}, "normalize": {"mode", "std_floor", "streaming_rate"}}.
// Missing keys keep their defaults.
PipelineOptions parse_pipeline_config(std::string_view document, PipelineOptions base = {});
// Complete config document; parse_pipeline_config reads it back unchanged.
std::string render_pipeline_config(const PipelineOptions& options);
void write_pipeline_config(JsonWriter& w, const PipelineOptions& options);

struct Analysis {
  FeatureStream stream;  // imputed and normalized
  ScoreSeries series;
};

// impute -> normalize -> score
Analysis analyze_stream(const FeatureStream& raw, const PipelineOptions& options,
                        const FrameObserver& observer = {});

// Parses manifest and frame documents, then runs analyze_stream. The session
// id falls back to the manifest's "session" field when `session_id` is empty.
Analysis analyze_documents(std::string_view manifest, std::string_view frames, std::string_view session_id,
                           const PipelineOptions& options, const FrameObserver& observer = {});

}  // namespace cuescope
