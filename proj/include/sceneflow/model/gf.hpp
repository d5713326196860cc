#pragma once

#include <string>

#include "sceneflow/config.hpp"
#include "sceneflow/core/nn.hpp"

namespace sf::model {

// Bidirectional cross-attentive fusion of the two frames' top-level features.
// Attention maps are row-normalized over the opposite frame.
struct DcaOutput {
    Tensor fusion_s_to_t;  // [M x d_a], fused features at target points
    Tensor fusion_t_to_s;  // [N x d_a], fused features at source points
    Tensor attn_s_to_t;    // [M x N]
    Tensor attn_t_to_s;    // [N x M]
};

struct GfOutput {
    Tensor gffe;  // [N x d_g]
    DcaOutput dca;
    Tensor weights;  // [N x M] aggregation map (undefined under maxpool)
};

// Global flow embedding at the coarsest level: cross-attentive fusion,
// external position encoding, all-to-all pair embedding, attentive (or
// max-pooled) aggregation back to the source points.
struct GlobalFusion {
    nn::Linear q, k, v;    // d_top -> d_a, shared between directions
    nn::Linear merge;      // d_a -> d_a, applied to the concatenated heads
    nn::Mlp pe_mlp;        // 9 -> pe_w -> pe_w
    nn::Mlp gfe_mlp;       // (2 d_a + 9 + pe_w) -> d_g -> d_g
    int heads = 1;
    int d_a = 0;
    std::string w_aggregation = "attentive";

    GlobalFusion() = default;
    GlobalFusion(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng);

    DcaOutput dca_fusion(const Tensor& source_feat, const Tensor& target_feat) const;

    // PE*_ij rows in (i outer, j inner) order: [N*M x (9 + pe_w)]
    Tensor position_encode(const Tensor& source_pos, const Tensor& target_pos) const;

    // GFE_ij rows aligned with position_encode: [N*M x d_g]
    Tensor global_flow_embedding(const DcaOutput& dca, const Tensor& pe_star) const;

    // softmax over the target axis of attn_s_to_t^T + attn_t_to_s
    static Tensor aggregation_weights(const Tensor& attn_s_to_t, const Tensor& attn_t_to_s);

    // GFFE_i = sum_j W_ij GFE_ij
    static Tensor aggregate_gffe(const Tensor& gfe, const Tensor& weights);

    GfOutput operator()(const Tensor& source_feat, const Tensor& target_feat, const Tensor& source_pos,
                        const Tensor& target_pos) const;
};

}  // namespace sf::model
