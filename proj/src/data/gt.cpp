#include "sceneflow/data/gt.hpp"

#include "sceneflow/core/error.hpp"

namespace sf::data {

std::vector<std::vector<int>> composed_sample_indices(const model::Pyramid& pyramid) {
    std::vector<std::vector<int>> composed(pyramid.levels.size());
    const int n0 = pyramid.levels[0].positions.rows();
    composed[0].resize(n0);
    for (int i = 0; i < n0; ++i) composed[0][i] = i;
    for (std::size_t l = 1; l < pyramid.levels.size(); ++l) {
        const auto& idx = pyramid.levels[l].sample_indices;
        composed[l].reserve(idx.size());
        for (int i : idx) {
            if (i < 0 || i >= static_cast<int>(composed[l - 1].size()))
                throw InvalidArgument("composed_sample_indices: index out of range");
            composed[l].push_back(composed[l - 1][i]);
        }
    }
    return composed;
}

std::vector<Tensor> downsample_gt(const Tensor& gt_flow, const model::Pyramid& pyramid) {
    if (gt_flow.rows() != pyramid.levels[0].positions.rows())
        throw InvalidArgument("downsample_gt: ground truth does not match the pyramid base level");
    auto composed = composed_sample_indices(pyramid);
    std::vector<Tensor> out;
    out.reserve(composed.size());
    out.push_back(gt_flow);
    for (std::size_t l = 1; l < composed.size(); ++l) out.push_back(gather_rows(gt_flow, composed[l]));
    return out;
}

std::vector<std::vector<int>> downsample_valid_indices(const std::vector<std::uint8_t>& mask,
                                                       const model::Pyramid& pyramid) {
    if (mask.size() != static_cast<std::size_t>(pyramid.levels[0].positions.rows()))
        throw InvalidArgument("downsample_valid_indices: mask does not match the pyramid base level");
    auto composed = composed_sample_indices(pyramid);
    std::vector<std::vector<int>> valid(composed.size());
    for (std::size_t l = 0; l < composed.size(); ++l)
        for (std::size_t r = 0; r < composed[l].size(); ++r)
            if (mask[static_cast<std::size_t>(composed[l][r])]) valid[l].push_back(static_cast<int>(r));
    return valid;
}

}  // namespace sf::data
