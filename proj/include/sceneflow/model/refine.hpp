#pragma once

#include "sceneflow/config.hpp"
#include "sceneflow/core/nn.hpp"
#include "sceneflow/geom/kernels.hpp"
#include "sceneflow/model/backbone.hpp"

namespace sf::model {

// Elementwise flow accumulation onto positions.
Tensor warp(const Tensor& positions, const Tensor& flow);

// 9-D pair encoding [x_i, y_j, y_j - x_i] for CSR neighbor pairs.
Tensor pair_position_encoding(const Tensor& query_pos, const Tensor& target_pos,
                              const geom::NeighborSet& neighbors);

// One re-embedding block: per-pair feature MLP over (updated target feature,
// query feature, pair encoding), a learned soft local map over each group,
// and a weighted sum back to the query points. Serves both the temporal
// variant (target = other frame) and the spatial one (target = itself).
struct ReembedBlock {
    nn::Linear target_path;  // d_t -> d: the target-feature pathway
    nn::Mlp pair_mlp;        // (d + d_q + 9) -> hidden -> d
    nn::Mlp pe_inner;        // 9 -> lm_pe_w
    nn::Mlp lm_mlp;          // (d + lm_pe_w) -> hidden -> 1, linear output
    double slope = 0.1;

    ReembedBlock() = default;
    ReembedBlock(nn::ParamStore& ps, const std::string& name, int d_query, int d_target, int d_out,
                 const ModelConfig& cfg, Rng& rng);

    struct Result {
        Tensor reembedded;      // [Nq x d]
        Tensor updated_target;  // [Nt x d], the target-path features
        Tensor local_map;       // [pairs x 1] soft weights (group softmax)
        Tensor pair_features;   // [pairs x d]
    };
    Result operator()(const Tensor& query_pos, const Tensor& query_feat, const Tensor& target_pos,
                      const Tensor& target_feat, const geom::NeighborSet& neighbors) const;
};

// Patch-to-patch matching cost: per-pair cost against target neighbors gated
// by a direction MLP, summed to a point cost, then re-aggregated over the
// warped frame's own neighborhoods.
struct CostVolumeLayer {
    nn::Mlp cost_mlp;    // (d + d_t + 3) -> hidden -> d
    nn::Mlp dir_target;  // 3 -> hidden -> d
    nn::Mlp dir_self;    // 3 -> hidden -> d

    CostVolumeLayer() = default;
    CostVolumeLayer(nn::ParamStore& ps, const std::string& name, int d_feat, int d_target,
                    const ModelConfig& cfg, Rng& rng);

    Tensor operator()(const Tensor& warped_pos, const Tensor& warped_feat, const Tensor& target_pos,
                      const Tensor& target_feat, const geom::NeighborSet& to_target,
                      const geom::NeighborSet& within_warped) const;
};

// PointConv over self-neighborhoods, an MLP, and a zero-initialized linear
// head of width 3 (training starts from the coarse estimate).
struct FlowPredictor {
    PointConvLayer conv;
    nn::Mlp mlp;
    nn::Linear out;

    FlowPredictor() = default;
    FlowPredictor(nn::ParamStore& ps, const std::string& name, int d_in, const ModelConfig& cfg, Rng& rng);

    Tensor operator()(const Tensor& positions, const Tensor& features,
                      const geom::NeighborSet& self_neighbors) const;
};

// One coarse-to-fine refinement stage: upsample flow and features, warp,
// re-embed, build the cost volume, predict the residual.
struct LevelRefiner {
    nn::Linear merge;  // (d_l + d_coarse) -> d_l
    ReembedBlock temporal;
    ReembedBlock spatial;
    nn::Mlp fuse;  // (d * active branches) -> d
    CostVolumeLayer cost_volume;
    FlowPredictor predictor;
    ModelConfig cfg;
    int level = 0;

    LevelRefiner() = default;
    LevelRefiner(nn::ParamStore& ps, int level, int d_coarse, const ModelConfig& cfg, Rng& rng);

    struct Result {
        Tensor flow;            // [N_l x 3] = upsampled + residual
        Tensor residual;        // predictor output
        Tensor upsampled_flow;  // inverse-distance upsampled coarse flow
        Tensor strf;            // re-embedded warped-frame features
        Tensor updated_target;  // temporal target pathway (raw target features if disabled)
        Tensor warped;          // warped positions
    };
    Result operator()(const PyramidLevel& source, const PyramidLevel& target, const Tensor& coarse_pos,
                      const Tensor& coarse_flow, const Tensor& coarse_feat) const;
};

}  // namespace sf::model
