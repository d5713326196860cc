#include "sceneflow/model/network.hpp"

namespace sf::model {

Network::Network(const Config& config, std::uint64_t param_seed) : config_(config) {
    config_.validate();
    Rng rng(param_seed);
    const auto& m = config_.model;

    backbone_ = Backbone(params_, m, rng);
    if (m.use_gf) gf_ = GlobalFusion(params_, m, rng);

    const int d_top = m.use_gf ? m.d_g : m.feature_widths.back();
    top_predictor_ = FlowPredictor(params_, "fp.top", d_top, m, rng);

    refiners_.resize(m.levels - 1);
    for (int l = m.levels - 2; l >= 0; --l) {
        const int d_coarse = l == m.levels - 2 ? d_top : m.feature_widths[l + 1];
        refiners_[l] = LevelRefiner(params_, l, d_coarse, m, rng);
    }
}

NetworkOutput Network::forward(const Tensor& source_pos, const Tensor& target_pos) const {
    const auto& m = config_.model;
    NetworkOutput out;
    out.source_pyramid = backbone_(source_pos);
    out.target_pyramid = backbone_(target_pos);

    const auto& s_top = out.source_pyramid.top();
    const auto& t_top = out.target_pyramid.top();

    Tensor top_feat;
    if (m.use_gf) {
        top_feat = gf_(s_top.features, t_top.features, s_top.positions, t_top.positions).gffe;
    } else {
        top_feat = s_top.features;
    }
    const int top_k = std::min(m.fp_k, s_top.positions.rows());
    Tensor top_flow =
        top_predictor_(s_top.positions, top_feat, geom::knn(s_top.positions, s_top.positions, top_k));

    out.flows.assign(m.levels, Tensor());
    out.flows[m.levels - 1] = top_flow;

    Tensor coarse_pos = s_top.positions;
    Tensor coarse_flow = top_flow;
    Tensor coarse_feat = top_feat;
    for (int l = m.levels - 2; l >= 0; --l) {
        auto res = refiners_[l](out.source_pyramid.levels[l], out.target_pyramid.levels[l], coarse_pos,
                                coarse_flow, coarse_feat);
        out.flows[l] = res.flow;
        coarse_pos = out.source_pyramid.levels[l].positions;
        coarse_flow = res.flow;
        coarse_feat = res.strf;
        if (l == 0) {
            out.strf_fine = res.strf;
            out.updated_target_fine = config_.loss.cfs_use_updated_target
                                          ? res.updated_target
                                          : out.target_pyramid.levels[0].features;
        }
    }
    return out;
}

Tensor Network::predict(const Tensor& source_pos, const Tensor& target_pos) const {
    return forward(source_pos, target_pos).flows[0];
}

}  // namespace sf::model
