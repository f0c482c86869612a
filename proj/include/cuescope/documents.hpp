#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "cuescope/json_writer.hpp"
#include "cuescope/scoring.hpp"

namespace cuescope {

// Scoring configuration echo shared by every output document.
void write_options(JsonWriter& w, const ScoringOptions& options);
ScoringOptions parse_options(const nlohmann::ordered_json& doc);

// Per-window score series served to clients: reals with 6 fractional digits,
// unscored windows carry null outlierness and representative frame.
std::string render_series(const ScoreSeries& series);

// Full-precision snapshot used by the session store; parse_series_snapshot
// reproduces the series exactly.
std::string render_series_snapshot(const ScoreSeries& series);
ScoreSeries parse_series_snapshot(std::string_view document);

}  // namespace cuescope
