#pragma once

#include <cstdint>
#include <vector>

#include "sceneflow/core/tensor.hpp"
#include "sceneflow/model/backbone.hpp"

namespace sf::data {

// Sample indices of each pyramid level composed down to level 0.
std::vector<std::vector<int>> composed_sample_indices(const model::Pyramid& pyramid);

// Ground-truth flow at every level, by indexing the full-resolution GT with
// the pyramid's composed sample indices (no interpolation).
std::vector<Tensor> downsample_gt(const Tensor& gt_flow, const model::Pyramid& pyramid);

// Per-level row indices of unmasked points (mask follows the same sampling).
std::vector<std::vector<int>> downsample_valid_indices(const std::vector<std::uint8_t>& mask,
                                                       const model::Pyramid& pyramid);

}  // namespace sf::data
