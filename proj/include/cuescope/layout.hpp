#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cuescope {

struct Modality {
  std::string name;
  std::size_t dim = 0;
  std::size_t offset = 0;  // first index of this modality's slice

  bool operator==(const Modality&) const = default;
};

// Named, contiguous slices of the concatenated per-frame feature vector.
// Slices follow declaration order and partition [0, total_dim).
class ModalityLayout {
 public:
  ModalityLayout() = default;

  // Throws Error(validation) on empty/duplicate names, zero dims, or fps <= 0.
  ModalityLayout(const std::vector<std::pair<std::string, std::size_t>>& dims, double fps);

  const std::vector<Modality>& modalities() const noexcept { return modalities_; }
  std::size_t size() const noexcept { return modalities_.size(); }
  std::size_t total_dim() const noexcept { return total_dim_; }
  double fps() const noexcept { return fps_; }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  const Modality& at(std::string_view name) const;

  // Feature indices of modality `m` / of every modality except `m`.
  std::vector<std::size_t> dims_of(std::size_t m) const;
  std::vector<std::size_t> dims_without(std::size_t m) const;

  bool operator==(const ModalityLayout&) const = default;

 private:
  std::vector<Modality> modalities_;
  std::size_t total_dim_ = 0;
  double fps_ = 0.0;
};

// face:136 (68 keypoints x 2), body:34 (17 keypoints x 2), head:3, gaze:2.
ModalityLayout default_layout(double fps = 30.0);

}  // namespace cuescope
