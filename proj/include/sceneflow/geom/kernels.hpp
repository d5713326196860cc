#pragma once

#include <limits>
#include <vector>

#include "sceneflow/core/tensor.hpp"

namespace sf::geom {

// Neighbor groups in CSR layout: group g owns indices[offsets[g] .. offsets[g+1]).
// Groups can be empty only when a radius truncation is active.
struct NeighborSet {
    int query_count = 0;
    int k_max = 0;
    double radius = std::numeric_limits<double>::infinity();
    bool has_radius = false;
    std::vector<int> indices;
    std::vector<int> offsets;  // size query_count + 1

    int group_size(int q) const { return offsets[q + 1] - offsets[q]; }
    bool fixed_k() const {
        for (int q = 0; q < query_count; ++q)
            if (group_size(q) != k_max) return false;
        return true;
    }
    // query index of each CSR entry, e.g. for gathering query rows per pair
    std::vector<int> query_of_entry() const;
    void validate(int reference_size) const;
};

// Farthest point sampling. Returns m distinct indices, seed first; each next
// pick maximizes the min distance to the selected set, ties to smaller index.
std::vector<int> fps(const Tensor& points, int m, int seed_index = 0);

// k nearest reference points per query, sorted by (distance, index).
NeighborSet knn(const Tensor& query, const Tensor& reference, int k);

// knn truncated to strict distance < r; groups may come out empty.
NeighborSet knn_radius(const Tensor& query, const Tensor& reference, int k, double r);

// Per (query, neighbor) pair: [neighbor_pos - query_pos, neighbor_features],
// laid out as [total_pairs x (3 + d)] in CSR order. Differentiable.
Tensor group_relative(const Tensor& reference_pos, const Tensor& reference_features,
                      const NeighborSet& neighbors, const Tensor& query_pos);

// Inverse-distance-weighted interpolation of per-point values from coarse to
// fine positions over the k nearest coarse points; w = 1/(d + eps).
// Differentiable in coarse_values.
Tensor idw_upsample(const Tensor& coarse_pos, const Tensor& coarse_values, const Tensor& fine_pos,
                    int k = 3, double eps = 1e-8);

}  // namespace sf::geom
