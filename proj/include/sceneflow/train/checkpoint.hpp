#pragma once

#include <string>
#include <vector>

#include "sceneflow/config.hpp"
#include "sceneflow/model/network.hpp"
#include "sceneflow/train/adam.hpp"

namespace sf::train {

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_epe3d = 0.0;
    double lr = 0.0;
};

// Full training snapshot: parameters, optimizer state, epoch counter, config
// fingerprint and the metric history. Stored as a named-array archive; with
// train.precision = single the parameter payload is quantized to float32.
struct Checkpoint {
    Config config;
    std::vector<std::vector<double>> params;  // ordered as ParamStore names
    std::vector<std::vector<double>> adam_m;
    std::vector<std::vector<double>> adam_v;
    long long adam_t = 0;
    int epoch = 0;  // number of completed epochs
    double best_val_epe = 0.0;
    std::vector<EpochLog> history;

    static Checkpoint capture(const model::Network& net, const Adam* optimizer, int epoch,
                              double best_val_epe, std::vector<EpochLog> history);

    // Copies parameters into a network built from the same config; throws on
    // any name or shape mismatch.
    void apply_params(model::Network& net) const;
    void apply_optimizer(Adam& optimizer) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace sf::train
