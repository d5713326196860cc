#pragma once

#include <cstdint>
#include <vector>

#include "sceneflow/core/tensor.hpp"
#include "sceneflow/geom/kernels.hpp"

namespace sf::loss {

// Multi-level supervised loss: sum over levels of delta_l * mean per-point
// L2 flow error. `valid` optionally restricts each level to unmasked points.
Tensor supervised_loss(const std::vector<Tensor>& pred_flows, const std::vector<Tensor>& gt_flows,
                       const std::vector<double>& deltas,
                       const std::vector<std::vector<int>>* valid = nullptr);

struct LfcResult {
    Tensor value;
    bool all_groups_empty = false;  // warning flag: no point had in-radius neighbors
};

// Local flow consistency: mean (over points with non-empty radius groups) of
// the mean in-group flow difference. Masked points are skipped as queries and
// dropped from groups.
LfcResult lfc_loss(const Tensor& flow, const geom::NeighborSet& neighbors,
                   const std::vector<std::uint8_t>* mask = nullptr);

// Cross-frame feature similarity: penalizes in-radius pairs whose cosine
// similarity falls below th, as mean over points of the mean group penalty.
Tensor cfs_loss(const Tensor& warped_features, const Tensor& target_features,
                const geom::NeighborSet& neighbors, double th, double eps = 1e-8,
                const std::vector<std::uint8_t>* mask = nullptr);

Tensor total_loss(const Tensor& sup, const Tensor& lfc, const Tensor& cfs, double lambda1,
                  double lambda2, double lambda3);

}  // namespace sf::loss
