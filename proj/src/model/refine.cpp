#include "sceneflow/model/refine.hpp"

#include "sceneflow/core/error.hpp"

namespace sf::model {

Tensor warp(const Tensor& positions, const Tensor& flow) {
    if (positions.rows() != flow.rows() || flow.cols() != 3)
        throw InvalidArgument("warp: positions and flow must both be [n x 3]");
    return add(positions, flow);
}

Tensor pair_position_encoding(const Tensor& query_pos, const Tensor& target_pos,
                              const geom::NeighborSet& neighbors) {
    Tensor xi = gather_rows(query_pos, neighbors.query_of_entry());
    Tensor yj = gather_rows(target_pos, neighbors.indices);
    return concat_cols({xi, yj, sub(yj, xi)});
}

ReembedBlock::ReembedBlock(nn::ParamStore& ps, const std::string& name, int d_query, int d_target,
                           int d_out, const ModelConfig& cfg, Rng& rng)
    : target_path(ps, name + ".target_path", d_target, d_out, rng),
      pair_mlp(ps, name + ".pair_mlp", {d_out + d_query + 9, cfg.str_hidden, d_out}, cfg.leaky_slope, rng),
      pe_inner(ps, name + ".pe_inner", {9, cfg.lm_pe_width}, cfg.leaky_slope, rng),
      lm_mlp(ps, name + ".lm_mlp", {d_out + cfg.lm_pe_width, cfg.str_hidden, 1}, cfg.leaky_slope, rng,
             /*linear_output=*/true),
      slope(cfg.leaky_slope) {}

ReembedBlock::Result ReembedBlock::operator()(const Tensor& query_pos, const Tensor& query_feat,
                                              const Tensor& target_pos, const Tensor& target_feat,
                                              const geom::NeighborSet& neighbors) const {
    if (!neighbors.fixed_k()) throw InvalidArgument("reembed: expected fixed-size neighbor groups");

    Result res;
    res.updated_target = linear_act(target_feat, target_path.w, target_path.b, slope);

    Tensor pe = pair_position_encoding(query_pos, target_pos, neighbors);
    Tensor gj = gather_rows(res.updated_target, neighbors.indices);
    Tensor fi = gather_rows(query_feat, neighbors.query_of_entry());
    res.pair_features = pair_mlp(concat_cols({gj, fi, pe}));

    Tensor lm_in = concat_cols({res.pair_features, pe_inner(pe)});
    res.local_map = segment_softmax(lm_mlp(lm_in), neighbors.offsets);
    res.reembedded = weighted_group_sum(res.pair_features, res.local_map, neighbors.query_count,
                                        neighbors.k_max);
    return res;
}

CostVolumeLayer::CostVolumeLayer(nn::ParamStore& ps, const std::string& name, int d_feat, int d_target,
                                 const ModelConfig& cfg, Rng& rng)
    : cost_mlp(ps, name + ".cost_mlp", {d_feat + d_target + 3, cfg.cost_hidden, d_feat}, cfg.leaky_slope, rng),
      dir_target(ps, name + ".dir_target", {3, cfg.dir_hidden, d_feat}, cfg.leaky_slope, rng),
      dir_self(ps, name + ".dir_self", {3, cfg.dir_hidden, d_feat}, cfg.leaky_slope, rng) {}

Tensor CostVolumeLayer::operator()(const Tensor& warped_pos, const Tensor& warped_feat,
                                   const Tensor& target_pos, const Tensor& target_feat,
                                   const geom::NeighborSet& to_target,
                                   const geom::NeighborSet& within_warped) const {
    if (!to_target.fixed_k() || !within_warped.fixed_k())
        throw InvalidArgument("cost_volume: expected fixed-size neighbor groups");

    // point-to-patch cost against the target neighborhood
    Tensor wk = gather_rows(warped_pos, to_target.query_of_entry());
    Tensor yj = gather_rows(target_pos, to_target.indices);
    Tensor dir_t = sub(yj, wk);
    Tensor cost = cost_mlp(concat_cols({gather_rows(warped_feat, to_target.query_of_entry()),
                                        gather_rows(target_feat, to_target.indices), dir_t}));
    Tensor cv_point =
        gated_group_sum(cost, dir_target(dir_t), to_target.query_count, to_target.k_max);

    // patch-to-patch aggregation over the warped frame's own neighborhoods
    Tensor wi = gather_rows(warped_pos, within_warped.query_of_entry());
    Tensor wk2 = gather_rows(warped_pos, within_warped.indices);
    Tensor dir_s = sub(wk2, wi);
    Tensor gathered = gather_rows(cv_point, within_warped.indices);
    return gated_group_sum(gathered, dir_self(dir_s), within_warped.query_count, within_warped.k_max);
}

FlowPredictor::FlowPredictor(nn::ParamStore& ps, const std::string& name, int d_in, const ModelConfig& cfg,
                             Rng& rng)
    : conv(ps, name + ".conv", d_in, cfg.fp_pointconv_width, cfg.pointconv_weight_hidden, cfg.leaky_slope,
           rng),
      mlp(ps, name + ".mlp", {cfg.fp_pointconv_width, cfg.fp_mlp_width}, cfg.leaky_slope, rng),
      out(ps, name + ".out", cfg.fp_mlp_width, 3, rng, /*zero_init=*/true) {}

Tensor FlowPredictor::operator()(const Tensor& positions, const Tensor& features,
                                 const geom::NeighborSet& self_neighbors) const {
    Tensor h = conv(positions, features, positions, self_neighbors);
    return out(mlp(h));
}

LevelRefiner::LevelRefiner(nn::ParamStore& ps, int level_, int d_coarse, const ModelConfig& cfg_, Rng& rng)
    : cfg(cfg_), level(level_) {
    const int d = cfg.feature_widths[level_];
    const std::string base = "refine.l" + std::to_string(level_);
    merge = nn::Linear(ps, base + ".merge", d + d_coarse, d, rng);
    if (cfg.use_str_temporal)
        temporal = ReembedBlock(ps, base + ".temporal", d, d, d, cfg, rng);
    if (cfg.use_str_spatial)
        spatial = ReembedBlock(ps, base + ".spatial", d, d, d, cfg, rng);
    const int branches = (cfg.use_str_temporal ? 1 : 0) + (cfg.use_str_spatial ? 1 : 0);
    if (branches > 0) fuse = nn::Mlp(ps, base + ".fuse", {branches * d, d}, cfg.leaky_slope, rng);
    cost_volume = CostVolumeLayer(ps, base + ".lfe", d, d, cfg, rng);
    predictor = FlowPredictor(ps, base + ".fp", 2 * d, cfg, rng);
}

LevelRefiner::Result LevelRefiner::operator()(const PyramidLevel& source, const PyramidLevel& target,
                                              const Tensor& coarse_pos, const Tensor& coarse_flow,
                                              const Tensor& coarse_feat) const {
    Result res;
    res.upsampled_flow =
        geom::idw_upsample(coarse_pos, coarse_flow, source.positions, cfg.idw_k, cfg.idw_eps);
    Tensor feat_up =
        geom::idw_upsample(coarse_pos, coarse_feat, source.positions, cfg.idw_k, cfg.idw_eps);
    Tensor f = linear_act(concat_cols({source.features, feat_up}), merge.w, merge.b, cfg.leaky_slope);

    res.warped = warp(source.positions, res.upsampled_flow);

    const int kt = std::min(cfg.str_k, target.positions.rows());
    const int ks = std::min(cfg.str_k, res.warped.rows());
    std::vector<Tensor> branches;
    if (cfg.use_str_temporal) {
        auto t = temporal(res.warped, f, target.positions, target.features,
                          geom::knn(res.warped, target.positions, kt));
        branches.push_back(t.reembedded);
        res.updated_target = t.updated_target;
    } else {
        res.updated_target = target.features;
    }
    if (cfg.use_str_spatial) {
        auto s = spatial(res.warped, f, res.warped, f, geom::knn(res.warped, res.warped, ks));
        branches.push_back(s.reembedded);
    }
    res.strf = branches.empty() ? f : fuse(concat_cols(branches));

    const int lkt = std::min(cfg.lfe_k_target, target.positions.rows());
    const int lks = std::min(cfg.lfe_k_self, res.warped.rows());
    Tensor cv = cost_volume(res.warped, res.strf, target.positions, target.features,
                            geom::knn(res.warped, target.positions, lkt),
                            geom::knn(res.warped, res.warped, lks));

    const int fpk = std::min(cfg.fp_k, res.warped.rows());
    res.residual = predictor(res.warped, concat_cols({cv, res.strf}),
                             geom::knn(res.warped, res.warped, fpk));
    res.flow = add(res.upsampled_flow, res.residual);
    return res;
}

}  // namespace sf::model
