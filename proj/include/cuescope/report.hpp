#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cuescope/scoring.hpp"

namespace cuescope {

inline constexpr std::string_view kGeneratorVersion = "cuescope 1.0.0";

// Pin shading: ranks 1-3 dark, everything after light.
enum class Tier { dark, light };
std::string_view to_string(Tier t) noexcept;
Tier tier_for_rank(std::size_t rank) noexcept;

struct Scene {
  std::size_t rank = 0;
  std::size_t window_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double outlierness = 0.0;
  std::string top_modality;
  std::vector<std::pair<std::string, double>> importances;  // layout order
  std::size_t representative_frame = 0;
  Tier tier = Tier::light;
  bool degenerate_attribution = false;

  bool operator==(const Scene&) const = default;
};

struct SceneReport {
  std::string session_id;
  std::size_t k = 0;
  double window_s = 0.0;
  double duration_s = 0.0;
  ScoringOptions options;
  std::string generator{kGeneratorVersion};
  std::vector<Scene> scenes;

  bool operator==(const SceneReport&) const = default;
};

// The k highest-outlierness scored windows, ties to the earlier window.
// Throws Error(parameter) for k <= 0 and Error(insufficient_data) when the
// series has no scored window.
SceneReport select_top_k(const ScoreSeries& series, long long k);

// Canonical report document: stable key order, reals with 6 fractional
// digits, importances rounded to 0.1 percentage points by largest remainder
// so each scene's displayed shares add up to exactly 100.0.
std::string render_report(const SceneReport& report);
SceneReport parse_report(std::string_view document);

// Rounds percentages to multiples of 10^-decimals so the rounded units sum to
// exactly 100 * 10^decimals. Largest fractional remainders receive the
// leftover units; ties go to the earlier entry.
std::vector<long long> largest_remainder_units(std::span<const double> percentages, int decimals = 1);

}  // namespace cuescope
