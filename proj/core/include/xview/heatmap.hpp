#pragma once

#include <string>

#include "xview/tensor.hpp"

namespace xview {

// Non-negative H x W map summing to one.
struct GroundingHeatmap {
  Tensor map;
  std::size_t affordance_class = 0;
  std::string image_id;
};

// Scales a non-negative map to unit mass. Throws DomainError on negative
// entries or zero total mass.
Tensor normalize_mass(const Tensor& map);

// Flat index of the largest entry (first on ties).
std::size_t argmax(const Tensor& map);

}  // namespace xview
