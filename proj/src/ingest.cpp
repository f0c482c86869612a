#include "cuescope/ingest.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"

namespace cuescope {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::schema, what + ": " + e.what());
  }
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

std::size_t FeatureStream::valid_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.valid ? 1 : 0;
  return n;
}

double FeatureStream::duration_s() const {
  if (frames.empty()) return 0.0;
  return frames.back().timestamp_s + 1.0 / layout.fps();
}

ModalityLayout parse_manifest(std::string_view document) {
  const json doc = parse_json(document, "manifest");
  if (!doc.is_object()) fail(ErrorKind::schema, "manifest: expected an object");
  if (!doc.contains("fps") || !doc["fps"].is_number())
    fail(ErrorKind::schema, "manifest.fps: expected a number");
  if (!doc.contains("modalities") || !doc["modalities"].is_array())
    fail(ErrorKind::schema, "manifest.modalities: expected an array");

  std::vector<std::pair<std::string, std::size_t>> dims;
  const auto& mods = doc["modalities"];
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const std::string path = "manifest.modalities[" + std::to_string(i) + "]";
    const auto& m = mods[i];
    if (!m.is_object()) fail(ErrorKind::schema, path + ": expected an object");
    if (!m.contains("name") || !m["name"].is_string())
      fail(ErrorKind::schema, path + ".name: expected a string");
    if (!m.contains("dim") || !m["dim"].is_number_integer())
      fail(ErrorKind::schema, path + ".dim: expected an integer");
    const auto dim = m["dim"].get<long long>();
    if (dim <= 0) fail(ErrorKind::validation, path + ".dim: must be positive");
    dims.emplace_back(m["name"].get<std::string>(), static_cast<std::size_t>(dim));
  }
  return ModalityLayout(dims, doc["fps"].get<double>());
}

std::string manifest_session(std::string_view document) {
  const json doc = parse_json(document, "manifest");
  if (doc.is_object() && doc.contains("session") && doc["session"].is_string())
    return doc["session"].get<std::string>();
  return {};
}

std::string render_manifest(const ModalityLayout& layout, std::string_view session_id) {
  ordered_json doc;
  if (!session_id.empty()) doc["session"] = std::string(session_id);
  doc["fps"] = layout.fps();
  doc["modalities"] = ordered_json::array();
  for (const auto& m : layout.modalities()) doc["modalities"].push_back({{"name", m.name}, {"dim", m.dim}});
  return doc.dump(2) + "\n";
}

FeatureStream parse_frames(std::string_view lines, const ModalityLayout& layout) {
  FeatureStream stream;
  stream.layout = layout;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < lines.size()) {
    auto nl = lines.find('\n', pos);
    if (nl == std::string_view::npos) nl = lines.size();
    const auto line = lines.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const std::string where = line_prefix(line_no);
    const json rec = parse_json(line, where.substr(0, where.size() - 2));
    if (!rec.is_object()) fail(ErrorKind::schema, where + "expected an object");
    if (!rec.contains("i") || !rec["i"].is_number_integer())
      fail(ErrorKind::schema, where + "field 'i' must be an integer");

    const long long index = rec["i"].get<long long>();
    const auto expected = static_cast<long long>(stream.frames.size());
    if (index != expected) {
      fail(ErrorKind::ordering, where + "frame index " + std::to_string(index) +
                                    (index < expected ? " is out of order or duplicated"
                                                      : " leaves a gap") +
                                    " (expected " + std::to_string(expected) + ")");
    }

    FeatureFrame frame;
    frame.index = static_cast<std::size_t>(index);
    if (rec.contains("t") && !rec["t"].is_null()) {
      if (!rec["t"].is_number()) fail(ErrorKind::schema, where + "field 't' must be a number");
      frame.timestamp_s = rec["t"].get<double>();
    } else {
      frame.timestamp_s = static_cast<double>(index) / layout.fps();
    }
    if (!stream.frames.empty() && frame.timestamp_s < stream.frames.back().timestamp_s)
      fail(ErrorKind::ordering, where + "timestamp decreases at frame index " + std::to_string(index));

    if (rec.contains("valid")) {
      if (!rec["valid"].is_boolean()) fail(ErrorKind::schema, where + "field 'valid' must be a boolean");
      frame.valid = rec["valid"].get<bool>();
    }

    if (rec.contains("x") && !rec["x"].is_null()) {
      const auto& x = rec["x"];
      if (!x.is_array()) fail(ErrorKind::schema, where + "field 'x' must be an array");
      if (x.size() != layout.total_dim()) {
        fail(ErrorKind::dimension, where + "frame index " + std::to_string(index) + " has " +
                                       std::to_string(x.size()) + " values, expected " +
                                       std::to_string(layout.total_dim()));
      }
      frame.values.resize(static_cast<Eigen::Index>(x.size()));
      for (std::size_t j = 0; j < x.size(); ++j) {
        // null encodes a missing (non-finite) value; such frames are dropped by impute_missing
        if (x[j].is_null()) {
          frame.values[static_cast<Eigen::Index>(j)] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        if (!x[j].is_number()) fail(ErrorKind::schema, where + "x[" + std::to_string(j) + "] is not a number");
        frame.values[static_cast<Eigen::Index>(j)] = x[j].get<double>();
      }
    } else if (frame.valid) {
      fail(ErrorKind::schema, where + "field 'x' is required for valid frames");
    }

    if (rec.contains("conf") && !rec["conf"].is_null()) {
      const auto& conf = rec["conf"];
      if (!conf.is_object()) fail(ErrorKind::schema, where + "field 'conf' must be an object");
      frame.confidence.assign(layout.size(), 1.0);
      for (const auto& [name, value] : conf.items()) {
        const auto m = layout.find(name);
        if (!m) fail(ErrorKind::schema, where + "conf names unknown modality '" + name + "'");
        if (!value.is_number()) fail(ErrorKind::schema, where + "conf." + name + " must be a number");
        const double c = value.get<double>();
        if (!(c >= 0.0 && c <= 1.0)) fail(ErrorKind::validation, where + "conf." + name + " outside [0,1]");
        frame.confidence[*m] = c;
      }
    }
    stream.frames.push_back(std::move(frame));
  }
  return stream;
}

std::string serialize_frames(const FeatureStream& stream) {
  std::string out;
  const auto& layout = stream.layout;
  for (const auto& f : stream.frames) {
    ordered_json rec;
    rec["i"] = f.index;
    rec["t"] = f.timestamp_s;
    if (f.values.size() > 0) {
      auto x = ordered_json::array();
      for (Eigen::Index j = 0; j < f.values.size(); ++j) x.push_back(f.values[j]);
      rec["x"] = std::move(x);
    }
    if (!f.confidence.empty()) {
      ordered_json conf = ordered_json::object();
      for (std::size_t m = 0; m < layout.size(); ++m) conf[layout.modalities()[m].name] = f.confidence[m];
      rec["conf"] = std::move(conf);
    }
    if (!f.valid) rec["valid"] = false;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

FeatureStream impute_missing(const FeatureStream& stream, const ImputePolicy& policy) {
  if (!(policy.confidence_threshold >= 0.0 && policy.confidence_threshold <= 1.0))
    fail(ErrorKind::parameter, "confidence threshold must lie in [0,1]");
  if (!(policy.max_gap_s >= 0.0)) fail(ErrorKind::parameter, "max gap must be non-negative");

  FeatureStream out = stream;
  const auto& mods = stream.layout.modalities();
  // Last trusted slice per modality and when it was observed.
  std::vector<std::optional<double>> last_time(mods.size());
  std::vector<Eigen::VectorXd> last_slice(mods.size());

  for (auto& frame : out.frames) {
    if (!frame.valid) continue;
    if (!frame.values.allFinite()) {
      frame.valid = false;
      continue;
    }
    for (std::size_t m = 0; m < mods.size(); ++m) {
      const auto off = static_cast<Eigen::Index>(mods[m].offset);
      const auto dim = static_cast<Eigen::Index>(mods[m].dim);
      const double conf = frame.confidence.empty() ? 1.0 : frame.confidence[m];
      if (conf >= policy.confidence_threshold) {
        last_time[m] = frame.timestamp_s;
        last_slice[m] = frame.values.segment(off, dim);
      } else if (last_time[m] && frame.timestamp_s - *last_time[m] <= policy.max_gap_s) {
        frame.values.segment(off, dim) = last_slice[m];
      } else {
        frame.valid = false;
      }
    }
  }
  return out;
}

std::pair<FeatureStream, NormStats> normalize(const FeatureStream& stream, const NormOptions& options) {
  if (stream.valid_count() < 2) fail(ErrorKind::insufficient_data, "normalization needs at least 2 valid frames");
  if (!(options.std_floor > 0.0)) fail(ErrorKind::parameter, "std floor must be positive");

  const auto d = static_cast<Eigen::Index>(stream.layout.total_dim());
  FeatureStream out = stream;
  NormStats stats{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};

  if (options.mode == NormMode::two_pass) {
    double n = 0.0;
    for (const auto& f : stream.frames) {
      if (!f.valid) continue;
      stats.mean += f.values;
      n += 1.0;
    }
    stats.mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& f : stream.frames) {
      if (f.valid) var += (f.values - stats.mean).array().square().matrix();
    }
    stats.stddev = (var / n).cwiseSqrt().cwiseMax(options.std_floor);
    for (auto& f : out.frames) {
      if (f.valid) f.values = ((f.values - stats.mean).array() / stats.stddev.array()).matrix();
    }
  } else {
    if (!(options.streaming_rate > 0.0 && options.streaming_rate < 1.0))
      fail(ErrorKind::parameter, "streaming rate must lie in (0,1)");
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    double n = 0.0;
    for (auto& f : out.frames) {
      if (!f.valid) continue;
      n += 1.0;
      const double rate = std::max(1.0 / n, options.streaming_rate);
      const Eigen::VectorXd delta = f.values - stats.mean;
      stats.mean += rate * delta;
      var = (1.0 - rate) * (var + rate * delta.array().square().matrix());
      stats.stddev = var.cwiseSqrt().cwiseMax(options.std_floor);
      f.values = ((f.values - stats.mean).array() / stats.stddev.array()).matrix();
    }
  }
  out.normalized = true;
  return {std::move(out), std::move(stats)};
}

}  // namespace cuescope
