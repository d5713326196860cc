#pragma once

#include <vector>

#include "sceneflow/config.hpp"
#include "sceneflow/core/nn.hpp"
#include "sceneflow/geom/kernels.hpp"

namespace sf::model {

// Continuous convolution over a point neighborhood: a shared MLP on relative
// coordinates produces per-neighbor weights that gate the neighbor features,
// the group is summed, projected, and passed through a leaky nonlinearity.
struct PointConvLayer {
    nn::Mlp weight_net;  // 3 -> hidden -> d_in
    nn::Linear project;  // d_in -> d_out
    double slope = 0.1;

    PointConvLayer() = default;
    PointConvLayer(nn::ParamStore& ps, const std::string& name, int d_in, int d_out, int weight_hidden,
                   double slope, Rng& rng);

    Tensor operator()(const Tensor& positions, const Tensor& features, const Tensor& centers,
                      const geom::NeighborSet& neighbors) const;
};

struct PyramidLevel {
    Tensor positions;                 // [N_l x 3]
    Tensor features;                  // [N_l x d_l]
    std::vector<int> sample_indices;  // into the previous (finer) level; empty at level 0
};

struct Pyramid {
    std::vector<PyramidLevel> levels;  // index 0 = full resolution
    const PyramidLevel& top() const { return levels.back(); }
};

// Hierarchical feature pyramid: FPS picks the next level's centers, KNN
// groups neighbors, PointConv aggregates. Raw coordinates seed the features.
struct Backbone {
    std::vector<PointConvLayer> convs;  // convs[0] runs at full resolution
    ModelConfig cfg;

    Backbone() = default;
    Backbone(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng);

    Pyramid operator()(const Tensor& positions) const;
};

}  // namespace sf::model
