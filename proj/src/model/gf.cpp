#include "sceneflow/model/gf.hpp"

#include <cmath>

#include "sceneflow/core/error.hpp"

namespace sf::model {

namespace {

// all-to-all pair index vectors, row-major (i outer, j inner)
void pair_indices(int n, int m, std::vector<int>& i_of, std::vector<int>& j_of) {
    i_of.resize(static_cast<std::size_t>(n) * m);
    j_of.resize(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            i_of[static_cast<std::size_t>(i) * m + j] = i;
            j_of[static_cast<std::size_t>(i) * m + j] = j;
        }
}

}  // namespace

GlobalFusion::GlobalFusion(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng)
    : q(ps, "gf.q", cfg.feature_widths.back(), cfg.d_a, rng),
      k(ps, "gf.k", cfg.feature_widths.back(), cfg.d_a, rng),
      v(ps, "gf.v", cfg.feature_widths.back(), cfg.d_a, rng),
      merge(ps, "gf.merge", cfg.d_a, cfg.d_a, rng),
      pe_mlp(ps, "gf.pe_mlp", {9, cfg.pe_mlp_width, cfg.pe_mlp_width}, cfg.leaky_slope, rng),
      gfe_mlp(ps, "gf.gfe_mlp", {2 * cfg.d_a + 9 + cfg.pe_mlp_width, cfg.d_g, cfg.d_g}, cfg.leaky_slope, rng),
      heads(cfg.heads),
      d_a(cfg.d_a),
      w_aggregation(cfg.w_aggregation) {}

DcaOutput GlobalFusion::dca_fusion(const Tensor& source_feat, const Tensor& target_feat) const {
    if (source_feat.cols() != q.w.rows() || target_feat.cols() != q.w.rows())
        throw InvalidArgument("dca_fusion: feature width does not match the projection input");
    const int dh = d_a / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_a));

    // one direction of cross attention; query side attends over the key side
    auto attend = [&](const Tensor& query_side, const Tensor& key_side, Tensor& attn_out) {
        Tensor qs = q(query_side);
        Tensor ks = k(key_side);
        Tensor vs = v(key_side);
        std::vector<Tensor> head_out;
        Tensor logits_mean;
        for (int h = 0; h < heads; ++h) {
            Tensor lh = mul_scalar(
                matmul(slice_cols(qs, h * dh, dh), transpose(slice_cols(ks, h * dh, dh))), scale);
            logits_mean = h == 0 ? lh : add(logits_mean, lh);
            head_out.push_back(matmul(softmax_rows(lh), slice_cols(vs, h * dh, dh)));
        }
        attn_out = softmax_rows(mul_scalar(logits_mean, 1.0 / heads));
        return merge(concat_cols(head_out));
    };

    DcaOutput out;
    out.fusion_s_to_t = attend(target_feat, source_feat, out.attn_s_to_t);
    out.fusion_t_to_s = attend(source_feat, target_feat, out.attn_t_to_s);
    return out;
}

Tensor GlobalFusion::position_encode(const Tensor& source_pos, const Tensor& target_pos) const {
    std::vector<int> i_of, j_of;
    pair_indices(source_pos.rows(), target_pos.rows(), i_of, j_of);
    Tensor xi = gather_rows(source_pos, std::move(i_of));
    Tensor yj = gather_rows(target_pos, std::move(j_of));
    Tensor pe = concat_cols({xi, yj, sub(yj, xi)});
    return concat_cols({pe, pe_mlp(pe)});
}

Tensor GlobalFusion::global_flow_embedding(const DcaOutput& dca, const Tensor& pe_star) const {
    const int n = dca.fusion_t_to_s.rows();
    const int m = dca.fusion_s_to_t.rows();
    if (pe_star.rows() != n * m) throw InvalidArgument("global_flow_embedding: pair count mismatch");
    std::vector<int> i_of, j_of;
    pair_indices(n, m, i_of, j_of);
    Tensor fi = gather_rows(dca.fusion_t_to_s, std::move(i_of));
    Tensor fj = gather_rows(dca.fusion_s_to_t, std::move(j_of));
    return gfe_mlp(concat_cols({fi, fj, pe_star}));
}

Tensor GlobalFusion::aggregation_weights(const Tensor& attn_s_to_t, const Tensor& attn_t_to_s) {
    if (attn_s_to_t.rows() != attn_t_to_s.cols() || attn_s_to_t.cols() != attn_t_to_s.rows())
        throw InvalidArgument("aggregation_weights: attention shapes are not transposes");
    return softmax_rows(add(transpose(attn_s_to_t), attn_t_to_s));
}

Tensor GlobalFusion::aggregate_gffe(const Tensor& gfe, const Tensor& weights) {
    const int n = weights.rows(), m = weights.cols();
    if (gfe.rows() != n * m) throw InvalidArgument("aggregate_gffe: pair count mismatch");
    Tensor w_flat = reshape(weights, n * m, 1);
    return weighted_group_sum(gfe, w_flat, n, m);
}

GfOutput GlobalFusion::operator()(const Tensor& source_feat, const Tensor& target_feat,
                                  const Tensor& source_pos, const Tensor& target_pos) const {
    GfOutput out;
    out.dca = dca_fusion(source_feat, target_feat);
    Tensor pe_star = position_encode(source_pos, target_pos);
    Tensor gfe = global_flow_embedding(out.dca, pe_star);
    if (w_aggregation == "maxpool") {
        out.gffe = group_max(gfe, source_pos.rows(), target_pos.rows());
    } else {
        out.weights = aggregation_weights(out.dca.attn_s_to_t, out.dca.attn_t_to_s);
        out.gffe = aggregate_gffe(gfe, out.weights);
    }
    return out;
}

}  // namespace sf::model
