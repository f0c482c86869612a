#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cuescope/layout.hpp"

namespace cuescope {

struct FeatureFrame {
  std::size_t index = 0;
  double timestamp_s = 0.0;
  Eigen::VectorXd values;
  bool valid = true;
  // Per-modality confidence in layout order; empty when the record had none.
  std::vector<double> confidence;
};

struct StreamMeta {
  std::string session_id;
  std::string source;
};

struct FeatureStream {
  ModalityLayout layout;
  std::vector<FeatureFrame> frames;
  StreamMeta meta;
  bool normalized = false;

  std::size_t valid_count() const;
  // Time covered by the stream: last timestamp plus one frame period.
  double duration_s() const;
};

struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

struct ImputePolicy {
  double confidence_threshold = 0.5;
  double max_gap_s = 1.0;

  bool operator==(const ImputePolicy&) const = default;
};

enum class NormMode { two_pass, streaming };

struct NormOptions {
  NormMode mode = NormMode::two_pass;
  double std_floor = 1e-6;
  // Forgetting rate of the running statistics in streaming mode. Early frames
  // use 1/n so the estimate is the plain running mean until n > 1/rate.
  double streaming_rate = 1e-3;

  bool operator==(const NormOptions&) const = default;
};

// Manifest: {"fps": number, "modalities": [{"name": str, "dim": int}, ...],
// optional "session": str}.
ModalityLayout parse_manifest(std::string_view document);
std::string render_manifest(const ModalityLayout& layout, std::string_view session_id = {});
// Optional "session" field of a manifest; empty when absent.
std::string manifest_session(std::string_view document);

// Newline-delimited JSON records {"i", "t"?, "x", "conf"?, "valid"?}.
// Blank lines are ignored. Errors carry the 1-based line number.
FeatureStream parse_frames(std::string_view lines, const ModalityLayout& layout);
std::string serialize_frames(const FeatureStream& stream);

FeatureStream impute_missing(const FeatureStream& stream, const ImputePolicy& policy);

std::pair<FeatureStream, NormStats> normalize(const FeatureStream& stream,
                                              const NormOptions& options = {});

}  // namespace cuescope
