#include "sceneflow/loss/losses.hpp"

#include "sceneflow/core/error.hpp"

namespace sf::loss {

namespace {

// CSR restricted to unmasked queries with unmasked members; empty groups drop out.
struct FilteredPairs {
    std::vector<int> query_idx;   // per pair
    std::vector<int> member_idx;  // per pair
    std::vector<int> offsets;     // per kept group
    int kept_groups = 0;
    bool any_group_existed = false;
};

FilteredPairs filter_pairs(const geom::NeighborSet& nn, const std::vector<std::uint8_t>* mask) {
    FilteredPairs fp;
    fp.offsets.push_back(0);
    for (int q = 0; q < nn.query_count; ++q) {
        if (mask && !(*mask)[q]) continue;
        int members = 0;
        for (int j = nn.offsets[q]; j < nn.offsets[q + 1]; ++j) {
            const int idx = nn.indices[j];
            if (mask && !(*mask)[idx]) continue;
            fp.query_idx.push_back(q);
            fp.member_idx.push_back(idx);
            ++members;
        }
        if (members > 0) {
            fp.any_group_existed = true;
            fp.offsets.push_back(static_cast<int>(fp.query_idx.size()));
            ++fp.kept_groups;
        }
    }
    return fp;
}

Tensor group_mean_of_pairs(const Tensor& per_pair, const FilteredPairs& fp) {
    std::vector<double> inv(per_pair.rows());
    for (int g = 0; g < fp.kept_groups; ++g) {
        const double w = 1.0 / (fp.offsets[g + 1] - fp.offsets[g]);
        for (int r = fp.offsets[g]; r < fp.offsets[g + 1]; ++r) inv[r] = w;
    }
    Tensor weighted = scale_rows(per_pair, Tensor::from(std::move(inv), per_pair.rows(), 1));
    return mean_all(segment_sum(weighted, fp.offsets));
}

}  // namespace

Tensor supervised_loss(const std::vector<Tensor>& pred_flows, const std::vector<Tensor>& gt_flows,
                       const std::vector<double>& deltas, const std::vector<std::vector<int>>* valid) {
    if (pred_flows.size() != gt_flows.size())
        throw InvalidArgument("supervised_loss: level count mismatch between predictions and ground truth");
    if (deltas.size() < pred_flows.size())
        throw InvalidArgument("supervised_loss: not enough level weights");

    Tensor total = Tensor::scalar(0.0);
    for (std::size_t l = 0; l < pred_flows.size(); ++l) {
        if (pred_flows[l].rows() != gt_flows[l].rows())
            throw InvalidArgument("supervised_loss: per-level point counts differ");
        Tensor norms = rows_l2norm(sub(gt_flows[l], pred_flows[l]));
        if (valid) {
            const auto& idx = (*valid)[l];
            if (idx.empty()) continue;  // every point masked at this level
            norms = gather_rows(norms, idx);
        }
        total = add(total, mul_scalar(mean_all(norms), deltas[l]));
    }
    return total;
}

LfcResult lfc_loss(const Tensor& flow, const geom::NeighborSet& neighbors,
                   const std::vector<std::uint8_t>* mask) {
    if (neighbors.query_count != flow.rows())
        throw InvalidArgument("lfc_loss: neighbor set does not match flow size");
    auto fp = filter_pairs(neighbors, mask);
    LfcResult res;
    if (fp.kept_groups == 0) {
        res.value = Tensor::scalar(0.0);
        res.all_groups_empty = true;
        return res;
    }
    Tensor diff = sub(gather_rows(flow, fp.query_idx), gather_rows(flow, fp.member_idx));
    res.value = group_mean_of_pairs(rows_l2norm(diff), fp);
    return res;
}

Tensor cfs_loss(const Tensor& warped_features, const Tensor& target_features,
                const geom::NeighborSet& neighbors, double th, double eps,
                const std::vector<std::uint8_t>* mask) {
    if (neighbors.query_count != warped_features.rows())
        throw InvalidArgument("cfs_loss: neighbor set does not match warped feature count");
    if (warped_features.cols() != target_features.cols())
        throw InvalidArgument("cfs_loss: feature widths differ");

    // member indices point into the target frame, so the source mask prunes
    // queries only
    FilteredPairs fp;
    if (!mask) {
        fp = filter_pairs(neighbors, nullptr);
    } else {
        geom::NeighborSet pruned = neighbors;
        pruned.indices.clear();
        pruned.offsets.assign(1, 0);
        for (int q = 0; q < neighbors.query_count; ++q) {
            if ((*mask)[q])
                for (int j = neighbors.offsets[q]; j < neighbors.offsets[q + 1]; ++j)
                    pruned.indices.push_back(neighbors.indices[j]);
            pruned.offsets.push_back(static_cast<int>(pruned.indices.size()));
        }
        fp = filter_pairs(pruned, nullptr);
    }
    if (fp.kept_groups == 0) return Tensor::scalar(0.0);

    Tensor a = gather_rows(warped_features, fp.query_idx);
    Tensor b = gather_rows(target_features, fp.member_idx);
    Tensor denom = add_scalar(mul(rows_l2norm(a), rows_l2norm(b)), eps);
    Tensor cs = div_elem(rows_dot(a, b), denom);
    Tensor penalty = relu(sub(Tensor::full(cs.rows(), 1, th), cs));  // F(cs - th)
    return group_mean_of_pairs(penalty, fp);
}

Tensor total_loss(const Tensor& sup, const Tensor& lfc, const Tensor& cfs, double lambda1,
                  double lambda2, double lambda3) {
    return add(add(mul_scalar(sup, lambda1), mul_scalar(lfc, lambda2)), mul_scalar(cfs, lambda3));
}

}  // namespace sf::loss
