#pragma once
// Hand-rolled stream generators for the property suites.

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string>
#include <random>
#include <utility>
#include <vector>

#include "cuescope/ingest.hpp"
#include "cuescope/layout.hpp"

namespace streams {

// Frame i at time i/fps with iid N(0,1) values; `shape` may edit each frame.
inline cuescope::FeatureStream gaussian(const cuescope::ModalityLayout& layout, std::size_t frames, std::uint64_t seed,
                                        const std::function<void(cuescope::FeatureFrame&)>& shape = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  cuescope::FeatureStream s;
  s.layout = layout;
  s.meta.session_id = "test";
  s.normalized = true;
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  for (std::size_t i = 0; i < frames; ++i) {
    cuescope::FeatureFrame f;
    f.index = i;
    f.timestamp_s = static_cast<double>(i) / layout.fps();
    f.values.resize(d);
    for (auto& v : f.values) v = z(rng);
    if (shape) shape(f);
    s.frames.push_back(std::move(f));
  }
  return s;
}

// Adds `shift` to every dimension of modality `m` for frames in [t0, t1).
inline std::function<void(cuescope::FeatureFrame&)> shift_modality(const cuescope::ModalityLayout& layout, std::size_t m,
                                                                   double t0, double t1, double shift) {
  const auto mod = layout.modalities()[m];
  return [mod, t0, t1, shift](cuescope::FeatureFrame& f) {
    if (f.timestamp_s >= t0 && f.timestamp_s < t1)
      f.values.segment(static_cast<Eigen::Index>(mod.offset), static_cast<Eigen::Index>(mod.dim)).array() += shift;
  };
}

// Same stream with modalities rearranged into `order` (names of the original layout).
inline cuescope::FeatureStream reorder(const cuescope::FeatureStream& s, const std::vector<std::size_t>& order) {
  std::vector<std::pair<std::string, std::size_t>> dims;
  for (auto m : order) dims.emplace_back(s.layout.modalities()[m].name, s.layout.modalities()[m].dim);
  cuescope::FeatureStream out = s;
  out.layout = cuescope::ModalityLayout(dims, s.layout.fps());
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    Eigen::Index at = 0;
    for (auto m : order) {
      const auto& mod = s.layout.modalities()[m];
      const auto n = static_cast<Eigen::Index>(mod.dim);
      out.frames[i].values.segment(at, n) = s.frames[i].values.segment(static_cast<Eigen::Index>(mod.offset), n);
      at += n;
    }
  }
  return out;
}

}  // namespace streams
