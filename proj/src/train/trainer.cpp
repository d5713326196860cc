#include "sceneflow/train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <memory>
#include <mutex>
#include <thread>

#include "sceneflow/core/error.hpp"
#include "sceneflow/data/gt.hpp"
#include "sceneflow/loss/losses.hpp"

namespace sf::train {

namespace {

constexpr std::uint64_t kResampleSalt = 0x5ce4eULL;

struct PreparedScene {
    Tensor pos1, pos2, gt_flow;          // resampled to the network input size
    std::vector<std::uint8_t> mask;      // resampled; empty when absent
    geom::NeighborSet lfc_neighbors;     // radius groups within the source frame
    geom::NeighborSet cfs_neighbors;     // radius groups, GT-warped source -> target
};

PreparedScene prepare_scene(const data::ScenePair& pair, const Config& cfg, std::uint64_t seed) {
    const int n_in = cfg.model.level_sizes[0];
    const bool oversample = pair.n() < n_in || pair.m() < n_in;
    data::ScenePair rs = data::resample_to(pair, n_in, seed, oversample);

    PreparedScene ps;
    ps.pos1 = rs.pos1_tensor();
    ps.pos2 = rs.pos2_tensor();
    ps.gt_flow = rs.flow_tensor();
    ps.mask = rs.mask;

    const int k = std::min(cfg.loss.k, n_in);
    if (cfg.loss.use_lfc) ps.lfc_neighbors = geom::knn_radius(ps.pos1, ps.pos1, k, cfg.loss.radius);
    if (cfg.loss.use_cfs) {
        Tensor gt_warped = add(ps.pos1, ps.gt_flow);
        ps.cfs_neighbors = geom::knn_radius(gt_warped, ps.pos2, std::min(cfg.loss.k, rs.m()),
                                            cfg.loss.radius);
    }
    return ps;
}

// total loss for one prepared scene; pure given (net params, scene)
Tensor scene_loss(const model::Network& net, const PreparedScene& ps, const Config& cfg) {
    auto out = net.forward(ps.pos1, ps.pos2);

    auto gt_levels = data::downsample_gt(ps.gt_flow, out.source_pyramid);
    Tensor sup;
    if (ps.mask.empty()) {
        sup = loss::supervised_loss(out.flows, gt_levels, cfg.loss.deltas);
    } else {
        auto valid = data::downsample_valid_indices(ps.mask, out.source_pyramid);
        sup = loss::supervised_loss(out.flows, gt_levels, cfg.loss.deltas, &valid);
    }

    Tensor lfc = Tensor::scalar(0.0);
    if (cfg.loss.use_lfc)
        lfc = loss::lfc_loss(out.flows[0], ps.lfc_neighbors, ps.mask.empty() ? nullptr : &ps.mask).value;

    Tensor cfs = Tensor::scalar(0.0);
    if (cfg.loss.use_cfs)
        cfs = loss::cfs_loss(out.strf_fine, out.updated_target_fine, ps.cfs_neighbors, cfg.loss.th,
                             cfg.loss.cos_eps, ps.mask.empty() ? nullptr : &ps.mask);

    return loss::total_loss(sup, lfc, cfs, cfg.loss.lambda1, cfg.loss.use_lfc ? cfg.loss.lambda2 : 0.0,
                            cfg.loss.use_cfs ? cfg.loss.lambda3 : 0.0);
}

void copy_params(const nn::ParamStore& from, nn::ParamStore& to) {
    for (const auto& name : from.names()) to.get(name).mutable_data() = from.get(name).data();
}

double validation_epe(const model::Network& net, const Dataset& val, int workers) {
    if (val.empty()) return 0.0;
    return evaluate(net, val, workers).pooled.epe3d;
}

}  // namespace

Dataset Dataset::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("dataset: not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".sfp")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    Dataset ds;
    ds.scenes.reserve(files.size());
    for (const auto& f : files) ds.scenes.push_back(data::load_scene_pair(f));
    return ds;
}

TrainResult train(const Config& config, const Dataset& train_set, const Dataset& val_set,
                  const std::function<void(const EpochLog&)>& on_epoch, const Checkpoint* resume) {
    config.validate();
    if (train_set.empty()) throw InvalidArgument("train: empty training set");
    const auto& tc = config.train;

    model::Network net(config, tc.seed);
    Adam optimizer(net.params(), tc.learning_rate, tc.beta1, tc.beta2, tc.weight_decay);
    int start_epoch = 0;
    std::vector<EpochLog> history;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    if (resume) {
        resume->apply_params(net);
        resume->apply_optimizer(optimizer);
        start_epoch = resume->epoch;
        history = resume->history;
        if (!history.empty()) {
            for (const auto& h : history)
                if (h.val_epe3d < best_val) {
                    best_val = h.val_epe3d;
                    best_epoch = h.epoch;
                }
        }
    }

    const int workers = std::max(1, tc.workers);

    // input views are re-drawn every epoch (sampling augmentation); scene i in
    // epoch e always gets the same seed, so runs are reproducible
    std::vector<PreparedScene> scenes(train_set.scenes.size());
    bool scenes_ready = false;
    auto prepare_epoch = [&](int epoch) {
        if (!tc.resample_per_epoch) {
            if (scenes_ready) return;
            scenes_ready = true;
            epoch = 0;
        }
        const auto n = train_set.scenes.size();
        auto worker = [&](std::size_t i) {
            scenes[i] = prepare_scene(train_set.scenes[i], config,
                                      mix_seed(tc.seed, kResampleSalt + n * epoch + i));
        };
        if (workers <= 1 || n <= 1) {
            for (std::size_t i = 0; i < n; ++i) worker(i);
        } else {
            std::vector<std::thread> threads;
            std::atomic<std::size_t> next{0};
            for (int t = 0; t < std::min<int>(workers, static_cast<int>(n)); ++t)
                threads.emplace_back([&] {
                    while (true) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= n) break;
                        worker(i);
                    }
                });
            for (auto& th : threads) th.join();
        }
    };
    Checkpoint best_ck = Checkpoint::capture(net, &optimizer, start_epoch, best_val, history);
    TrainResult result;

    for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
        prepare_epoch(epoch);
        const double lr =
            tc.learning_rate * std::pow(tc.decay_factor, static_cast<double>(epoch / tc.decay_every));
        optimizer.set_lr(lr);

        std::vector<int> order(scenes.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng shuffle_rng(mix_seed(tc.seed, 0xe90c4ULL + static_cast<std::uint64_t>(epoch)));
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += tc.batch_size) {
            const int bsz = static_cast<int>(std::min<std::size_t>(tc.batch_size, order.size() - b0));
            net.params().zero_grads();

            std::vector<double> losses(bsz, 0.0);
            if (workers <= 1 || bsz == 1) {
                for (int i = 0; i < bsz; ++i) {
                    Tensor l = scene_loss(net, scenes[order[b0 + i]], config);
                    losses[i] = l.data()[0];
                    l.backward();
                }
            } else {
                // each worker accumulates into its own parameter clone; the
                // clones' gradients are reduced in worker order afterwards
                const int w = std::min(workers, bsz);
                std::vector<std::unique_ptr<model::Network>> clones(w);
                std::vector<std::thread> threads;
                std::exception_ptr error;
                std::mutex error_mu;
                for (int t = 0; t < w; ++t) {
                    clones[t] = std::make_unique<model::Network>(config, tc.seed);
                    copy_params(net.params(), clones[t]->params());
                    clones[t]->params().zero_grads();
                }
                for (int t = 0; t < w; ++t) {
                    threads.emplace_back([&, t] {
                        try {
                            for (int i = t; i < bsz; i += w) {
                                Tensor l = scene_loss(*clones[t], scenes[order[b0 + i]], config);
                                losses[i] = l.data()[0];
                                l.backward();
                            }
                        } catch (...) {
                            std::lock_guard<std::mutex> lock(error_mu);
                            if (!error) error = std::current_exception();
                        }
                    });
                }
                for (auto& th : threads) th.join();
                if (error) std::rethrow_exception(error);
                for (const auto& name : net.params().names()) {
                    auto& dst = net.params().get(name).mutable_grad();
                    for (int t = 0; t < w; ++t) {
                        const auto& src = clones[t]->params().get(name).grad();
                        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                    }
                }
            }

            double batch_loss = 0.0;
            for (int i = 0; i < bsz; ++i) batch_loss += losses[i];
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss))
                throw NumericalError("train: non-finite loss in epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batches) + " (first scene index " +
                                     std::to_string(order[b0]) + ")");

            net.params().scale_grads(1.0 / bsz);
            if (tc.grad_clip > 0.0) {
                const double norm = net.params().grad_global_norm();
                if (norm > tc.grad_clip) net.params().scale_grads(tc.grad_clip / norm);
            }
            optimizer.step();
            epoch_loss += batch_loss;
            ++batches;
        }

        EpochLog log;
        log.epoch = epoch + 1;
        log.train_loss = batches > 0 ? epoch_loss / batches : 0.0;
        log.val_epe3d = validation_epe(net, val_set, workers);
        log.lr = lr;
        history.push_back(log);
        if (on_epoch) on_epoch(log);

        if (val_set.empty() || log.val_epe3d < best_val) {
            best_val = log.val_epe3d;
            best_epoch = log.epoch;
            best_ck = Checkpoint::capture(net, &optimizer, log.epoch, best_val, history);
        }
        if (tc.patience > 0 && best_epoch >= 0 && log.epoch - best_epoch >= tc.patience) break;
    }

    result.best = std::move(best_ck);
    result.best.history = history;
    result.last = Checkpoint::capture(net, &optimizer, history.empty() ? start_epoch : history.back().epoch,
                                      best_val, history);
    result.log = history;
    result.best_epoch = best_epoch;
    return result;
}

std::vector<float> infer_flow(const model::Network& net, const data::ScenePair& pair,
                              std::uint64_t sample_seed) {
    NoGradGuard guard;
    const auto& cfg = net.config();
    const int n_in = cfg.model.level_sizes[0];
    const bool oversample = pair.n() < n_in || pair.m() < n_in;
    data::ScenePair rs = data::resample_to(pair, n_in, sample_seed, oversample);

    Tensor pos1 = rs.pos1_tensor();
    Tensor flow = net.predict(pos1, rs.pos2_tensor());

    // map the sampled prediction back onto the original points
    Tensor up = geom::idw_upsample(pos1, flow, pair.pos1_tensor(), cfg.model.idw_k, cfg.model.idw_eps);
    std::vector<float> out(up.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(up.data()[i]);
    return out;
}

EvalResult evaluate(const model::Network& net, const Dataset& dataset, int workers,
                    std::uint64_t sample_seed) {
    EvalResult res;
    res.per_scene.resize(dataset.scenes.size());
    std::vector<metrics::Accumulator> model_acc(dataset.scenes.size());
    std::vector<metrics::Accumulator> zero_acc(dataset.scenes.size());

    auto eval_scene = [&](std::size_t i) {
        const auto& pair = dataset.scenes[i];
        auto pred = infer_flow(net, pair, mix_seed(sample_seed, kResampleSalt + i));
        const std::vector<float> zeros(pred.size(), 0.0f);
        const auto* mask = pair.has_mask() ? &pair.mask : nullptr;
        const auto* intr = pair.has_intrinsics() ? &pair.intrinsics : nullptr;
        model_acc[i] = metrics::accumulate_metrics(pair.pos1, pred, pair.flow, mask, intr);
        zero_acc[i] = metrics::accumulate_metrics(pair.pos1, zeros, pair.flow, mask, intr);
        res.per_scene[i].model = model_acc[i].report();
        res.per_scene[i].zero_flow = zero_acc[i].report();
    };

    const int w = std::max(1, workers);
    if (w <= 1 || dataset.scenes.size() <= 1) {
        for (std::size_t i = 0; i < dataset.scenes.size(); ++i) eval_scene(i);
    } else {
        std::vector<std::thread> threads;
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mu;
        for (int t = 0; t < w; ++t)
            threads.emplace_back([&] {
                try {
                    while (true) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= dataset.scenes.size()) break;
                        eval_scene(i);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            });
        for (auto& th : threads) th.join();
        if (error) std::rethrow_exception(error);
    }

    metrics::Accumulator pooled, zero_pooled;
    for (std::size_t i = 0; i < dataset.scenes.size(); ++i) {
        pooled.merge(model_acc[i]);
        zero_pooled.merge(zero_acc[i]);
    }
    res.pooled = pooled.report();
    res.zero_flow_pooled = zero_pooled.report();
    return res;
}

Config apply_ablation_variant(Config config, const std::string& variant) {
    if (variant == "full") return config;
    if (variant == "no_gf") {
        config.model.use_gf = false;
        return config;
    }
    if (variant == "no_str") {
        config.model.use_str_spatial = false;
        config.model.use_str_temporal = false;
        return config;
    }
    if (variant == "no_da") {
        config.loss.use_lfc = false;
        config.loss.use_cfs = false;
        return config;
    }
    throw InvalidArgument("ablation: unknown variant " + variant);
}

std::vector<AblationRow> run_ablation(const Config& base, const Dataset& train_set,
                                      const Dataset& val_set, const std::vector<std::uint64_t>& seeds,
                                      const std::function<void(const AblationRow&)>& on_row) {
    const std::vector<std::string> variants = {"full", "no_gf", "no_str", "no_da"};
    std::vector<AblationRow> rows;
    for (const auto& variant : variants) {
        for (auto seed : seeds) {
            Config cfg = apply_ablation_variant(base, variant);
            cfg.train.seed = seed;
            auto result = train(cfg, train_set, val_set);
            model::Network net(cfg, seed);
            result.best.apply_params(net);
            AblationRow row;
            row.variant = variant;
            row.seed = seed;
            row.heldout = evaluate(net, val_set, cfg.train.workers).pooled;
            if (on_row) on_row(row);
            rows.push_back(row);
        }
    }
    return rows;
}

double median_epe(const std::vector<AblationRow>& rows, const std::string& variant) {
    std::vector<double> vals;
    for (const auto& r : rows)
        if (r.variant == variant) vals.push_back(r.heldout.epe3d);
    if (vals.empty()) throw InvalidArgument("median_epe: no rows for variant " + variant);
    std::sort(vals.begin(), vals.end());
    return vals[vals.size() / 2];
}

}  // namespace sf::train
