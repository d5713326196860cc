#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sceneflow/config.hpp"
#include "sceneflow/core/nn.hpp"
#include "sceneflow/model/backbone.hpp"
#include "sceneflow/model/gf.hpp"
#include "sceneflow/model/refine.hpp"

namespace sf::model {

struct NetworkOutput {
    std::vector<Tensor> flows;     // per level, index 0 = full resolution
    Tensor strf_fine;              // level-0 re-embedded features (CFS loss input)
    Tensor updated_target_fine;    // level-0 target pathway features
    Pyramid source_pyramid;
    Pyramid target_pyramid;
};

// The complete coarse-to-fine scene-flow estimator: a shared feature pyramid
// for both frames, global fusion flow initialization at the top, and residual
// refinement with re-embedding down to full resolution.
class Network {
public:
    Network(const Config& config, std::uint64_t param_seed);

    NetworkOutput forward(const Tensor& source_pos, const Tensor& target_pos) const;

    // Convenience: full-resolution flow only.
    Tensor predict(const Tensor& source_pos, const Tensor& target_pos) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const Config& config() const { return config_; }
    const GlobalFusion& global_fusion() const { return gf_; }

private:
    Config config_;
    nn::ParamStore params_;
    Backbone backbone_;
    GlobalFusion gf_;
    FlowPredictor top_predictor_;
    std::vector<LevelRefiner> refiners_;  // index l refines level l, l = 0..L-2
};

}  // namespace sf::model
