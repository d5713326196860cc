#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sceneflow/core/tensor.hpp"
#include "sceneflow/data/archive.hpp"

namespace sf::data {

// One source/target frame pair with ground-truth flow. Values are kept in
// float32 mirroring the on-disk layout, so save/load round-trips bitwise.
struct ScenePair {
    std::vector<float> pos1;        // N x 3
    std::vector<float> pos2;        // M x 3
    std::vector<float> flow;        // N x 3, source -> target
    std::vector<std::uint8_t> mask; // N, 1 = valid; empty = absent
    std::vector<float> intrinsics;  // 3 x 3 row-major; empty = absent
    std::vector<NamedArray> extras; // unknown arrays, preserved on round-trip

    int n() const { return static_cast<int>(pos1.size() / 3); }
    int m() const { return static_cast<int>(pos2.size() / 3); }
    bool has_mask() const { return !mask.empty(); }
    bool has_intrinsics() const { return !intrinsics.empty(); }

    void validate() const;

    Tensor pos1_tensor() const;
    Tensor pos2_tensor() const;
    Tensor flow_tensor() const;
};

ScenePair load_scene_pair(const std::string& path);
void save_scene_pair(const ScenePair& pair, const std::string& path);

// Uniform random subsample of both frames to n_points each; flow and mask
// follow the source indices. Oversampling requires with_replacement.
ScenePair resample_to(const ScenePair& pair, int n_points, std::uint64_t seed,
                      bool with_replacement = false);

// Indices chosen for the source frame by resample_to under the same seed
// (used to map predictions back to original points).
struct ResampleIndices {
    std::vector<int> source;
    std::vector<int> target;
};
ResampleIndices resample_indices(int n, int m, int n_points, std::uint64_t seed,
                                 bool with_replacement = false);

}  // namespace sf::data
