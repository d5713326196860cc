#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sf {

// Network architecture and module hyperparameters. Defaults are the desk
// profile; paper_profile() switches to the full-size configuration.
struct ModelConfig {
    int levels = 4;
    std::vector<int> level_sizes = {2048, 512, 128, 32};  // fine to coarse
    std::vector<int> feature_widths = {16, 32, 64, 128};
    int backbone_k = 16;
    int pointconv_weight_hidden = 16;
    double leaky_slope = 0.1;

    // global fusion (top level)
    int d_a = 32;
    int heads = 2;
    int pe_mlp_width = 32;
    int d_g = 64;
    std::string w_aggregation = "attentive";  // attentive | maxpool

    // spatial-temporal re-embedding
    int str_k = 8;
    int str_hidden = 32;
    int lm_pe_width = 16;

    // local flow embedding (cost volume)
    int lfe_k_target = 8;
    int lfe_k_self = 8;
    int cost_hidden = 32;
    int dir_hidden = 16;

    // flow predictor
    int fp_k = 8;
    int fp_pointconv_width = 64;
    int fp_mlp_width = 64;

    // upsampling
    int idw_k = 3;
    double idw_eps = 1e-8;

    // ablation switches
    bool use_gf = true;
    bool use_str_spatial = true;
    bool use_str_temporal = true;
};

struct LossConfig {
    std::vector<double> deltas = {0.02, 0.04, 0.08, 0.16, 0.32};  // per level, fine to coarse
    double lambda1 = 0.7;
    double lambda2 = 0.15;
    double lambda3 = 0.15;
    double radius = 0.0025;  // scene units; 0.05 x diameter/20 for unit-diameter scenes
    double th = 0.95;
    int k = 32;
    double cos_eps = 1e-8;
    bool use_lfc = true;
    bool use_cfs = true;
    bool cfs_use_updated_target = true;  // false: raw target features in the similarity
};

struct TrainConfig {
    double learning_rate = 0.001;
    int decay_every = 80;
    double decay_factor = 0.5;
    int batch_size = 8;
    int epochs = 100;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 0.0;
    std::string precision = "double";  // double | single (single quantizes checkpoint storage)
    double grad_clip = 5.0;
    int patience = 50;
    int workers = 2;
    bool resample_per_epoch = true;  // re-draw input views every epoch
};

struct SynthConfig {
    int object_count = 2;
    int points_per_object = 1024;
    double rotation_max = 0.2;      // radians
    double translation_max = 0.08;  // scene units, pre-normalization
    double noise_sigma = 0.0;
    double occlusion_fraction = 0.0;
    std::uint64_t seed = 1;
};

struct Config {
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;
    SynthConfig synth;

    // Full-size profile: 5 levels, 8192-point input, wide features.
    static Config paper_profile();

    std::string to_text() const;
    static Config from_text(const std::string& text);
    static Config from_file(const std::string& path);
    void save(const std::string& path) const;

    // FNV-1a over the canonical serialization.
    std::string fingerprint() const;

    void validate() const;
};

}  // namespace sf
