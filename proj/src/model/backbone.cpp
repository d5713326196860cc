#include "sceneflow/model/backbone.hpp"

#include "sceneflow/core/error.hpp"

namespace sf::model {

PointConvLayer::PointConvLayer(nn::ParamStore& ps, const std::string& name, int d_in, int d_out,
                               int weight_hidden, double slope_, Rng& rng)
    : weight_net(ps, name + ".weight_net", {3, weight_hidden, d_in}, slope_, rng),
      project(ps, name + ".project", d_in, d_out, rng),
      slope(slope_) {}

Tensor PointConvLayer::operator()(const Tensor& positions, const Tensor& features, const Tensor& centers,
                                  const geom::NeighborSet& neighbors) const {
    for (int q = 0; q < neighbors.query_count; ++q)
        if (neighbors.group_size(q) == 0)
            throw InvalidArgument("pointconv: empty neighbor group");
    if (!neighbors.fixed_k())
        throw InvalidArgument("pointconv: expected fixed-size neighbor groups");

    const int d = features.cols();
    Tensor pairs = geom::group_relative(positions, features, neighbors, centers);
    Tensor rel = slice_cols(pairs, 0, 3);
    Tensor nfeat = slice_cols(pairs, 3, d);
    Tensor pooled =
        gated_group_sum(nfeat, weight_net(rel), neighbors.query_count, neighbors.k_max);
    return linear_act(pooled, project.w, project.b, slope);
}

Backbone::Backbone(nn::ParamStore& ps, const ModelConfig& cfg_, Rng& rng) : cfg(cfg_) {
    convs.emplace_back(ps, "backbone.l0", 3, cfg.feature_widths[0], cfg.pointconv_weight_hidden,
                       cfg.leaky_slope, rng);
    for (int l = 1; l < cfg.levels; ++l)
        convs.emplace_back(ps, "backbone.l" + std::to_string(l), cfg.feature_widths[l - 1],
                           cfg.feature_widths[l], cfg.pointconv_weight_hidden, cfg.leaky_slope, rng);
}

Pyramid Backbone::operator()(const Tensor& positions) const {
    if (positions.rows() < cfg.level_sizes[0])
        throw InvalidArgument("backbone: input must hold at least level_sizes[0] points");

    Pyramid pyr;
    pyr.levels.resize(cfg.levels);

    auto& base = pyr.levels[0];
    base.positions = positions;
    const int k0 = std::min(cfg.backbone_k, positions.rows());
    base.features = convs[0](positions, positions, positions, geom::knn(positions, positions, k0));

    for (int l = 1; l < cfg.levels; ++l) {
        const auto& prev = pyr.levels[l - 1];
        auto& cur = pyr.levels[l];
        cur.sample_indices = geom::fps(prev.positions, cfg.level_sizes[l], /*seed_index=*/0);
        cur.positions = gather_rows(prev.positions, cur.sample_indices);
        const int k = std::min(cfg.backbone_k, prev.positions.rows());
        auto neighbors = geom::knn(cur.positions, prev.positions, k);
        cur.features = convs[l](prev.positions, prev.features, cur.positions, neighbors);
    }
    return pyr;
}

}  // namespace sf::model
