#include "cuescope/layout.hpp"

#include <unordered_set>

#include "cuescope/error.hpp"

namespace cuescope {

ModalityLayout::ModalityLayout(const std::vector<std::pair<std::string, std::size_t>>& dims,
                               double fps)
    : fps_(fps) {
  if (!(fps > 0.0)) fail(ErrorKind::validation, "fps must be positive");
  if (dims.empty()) fail(ErrorKind::validation, "layout needs at least one modality");
  std::unordered_set<std::string> seen;
  for (const auto& [name, dim] : dims) {
    if (name.empty()) fail(ErrorKind::validation, "modality name must be non-empty");
    if (!seen.insert(name).second) fail(ErrorKind::validation, "duplicate modality name '" + name + "'");
    if (dim == 0) fail(ErrorKind::validation, "modality '" + name + "' must have dim > 0");
    modalities_.push_back({name, dim, total_dim_});
    total_dim_ += dim;
  }
}

std::optional<std::size_t> ModalityLayout::find(std::string_view name) const noexcept {
  for (std::size_t m = 0; m < modalities_.size(); ++m) {
    if (modalities_[m].name == name) return m;
  }
  return std::nullopt;
}

const Modality& ModalityLayout::at(std::string_view name) const {
  auto m = find(name);
  if (!m) fail(ErrorKind::validation, "unknown modality '" + std::string(name) + "'");
  return modalities_[*m];
}

std::vector<std::size_t> ModalityLayout::dims_of(std::size_t m) const {
  const auto& mod = modalities_.at(m);
  std::vector<std::size_t> out(mod.dim);
  for (std::size_t j = 0; j < mod.dim; ++j) out[j] = mod.offset + j;
  return out;
}

std::vector<std::size_t> ModalityLayout::dims_without(std::size_t m) const {
  const auto& mod = modalities_.at(m);
  std::vector<std::size_t> out;
  out.reserve(total_dim_ - mod.dim);
  for (std::size_t j = 0; j < total_dim_; ++j) {
    if (j < mod.offset || j >= mod.offset + mod.dim) out.push_back(j);
  }
  return out;
}

ModalityLayout default_layout(double fps) {
  return ModalityLayout({{"face", 136}, {"body", 34}, {"head", 3}, {"gaze", 2}}, fps);
}

}  // namespace cuescope
