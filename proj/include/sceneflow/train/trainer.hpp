#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sceneflow/config.hpp"
#include "sceneflow/data/scene_pair.hpp"
#include "sceneflow/eval/metrics.hpp"
#include "sceneflow/model/network.hpp"
#include "sceneflow/train/checkpoint.hpp"

namespace sf::train {

struct Dataset {
    std::vector<data::ScenePair> scenes;

    static Dataset load_dir(const std::string& dir);
    bool empty() const { return scenes.empty(); }
    int size() const { return static_cast<int>(scenes.size()); }
};

struct TrainResult {
    Checkpoint best;
    Checkpoint last;
    std::vector<EpochLog> log;
    int best_epoch = -1;
};

// Runs mini-batch training of the total loss with the adaptive-moment
// optimizer, halving the learning rate every decay_every epochs, logging
// per-epoch train loss and validation EPE3D, and keeping the best-val
// checkpoint. Fully seeded; aborts with NumericalError on non-finite loss.
TrainResult train(const Config& config, const Dataset& train_set, const Dataset& val_set,
                  const std::function<void(const EpochLog&)>& on_epoch = nullptr,
                  const Checkpoint* resume = nullptr);

struct SceneEval {
    metrics::MetricReport model;
    metrics::MetricReport zero_flow;
};

struct EvalResult {
    metrics::MetricReport pooled;
    metrics::MetricReport zero_flow_pooled;
    std::vector<SceneEval> per_scene;
};

// Deterministic inference over a dataset: each pair is resampled to the
// network input size, the predicted flow is interpolated back to the original
// points, and point-pooled metrics are reported next to the zero-flow
// baseline. Masked points are excluded.
EvalResult evaluate(const model::Network& net, const Dataset& dataset, int workers = 1,
                    std::uint64_t sample_seed = 0);

// Full-resolution flow for one pair, mapped back to the original points.
std::vector<float> infer_flow(const model::Network& net, const data::ScenePair& pair,
                              std::uint64_t sample_seed = 0);

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    metrics::MetricReport heldout;
};

// Trains and evaluates the standard switch settings (full, no-gf, no-str,
// no-da-losses) across the given seeds.
std::vector<AblationRow> run_ablation(const Config& base, const Dataset& train_set,
                                      const Dataset& val_set, const std::vector<std::uint64_t>& seeds,
                                      const std::function<void(const AblationRow&)>& on_row = nullptr);

Config apply_ablation_variant(Config config, const std::string& variant);
double median_epe(const std::vector<AblationRow>& rows, const std::string& variant);

}  // namespace sf::train
