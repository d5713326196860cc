#include "sceneflow/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sceneflow/config.hpp"
#include "sceneflow/core/error.hpp"
#include "sceneflow/data/synth.hpp"
#include "sceneflow/train/trainer.hpp"

namespace sf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << text;
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

Config load_config(const std::string& config_path, const std::string& profile) {
    if (!config_path.empty()) return Config::from_file(config_path);
    if (const char* env = std::getenv("SCENEFLOW_CONFIG"); env && *env) return Config::from_file(env);
    if (profile == "paper") return Config::paper_profile();
    return Config{};
}

std::string scene_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%06d.sfp", index);
    return buf;
}

json report_json(const metrics::MetricReport& r) {
    json j;
    j["epe3d"] = r.epe3d;
    j["as3d"] = r.as3d;
    j["ar3d"] = r.ar3d;
    j["out3d"] = r.out3d;
    j["count"] = r.count;
    if (r.has_2d) {
        j["epe2d"] = r.epe2d;
        j["acc2d"] = r.acc2d;
        j["count2d"] = r.count2d;
    }
    return j;
}

std::string report_text(const metrics::MetricReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "epe3d " << r.epe3d << "\n";
    os << "as3d " << r.as3d << "\n";
    os << "ar3d " << r.ar3d << "\n";
    os << "out3d " << r.out3d << "\n";
    os << "count " << r.count << "\n";
    if (r.has_2d) {
        os << "epe2d " << r.epe2d << "\n";
        os << "acc2d " << r.acc2d << "\n";
        os << "count2d " << r.count2d << "\n";
    }
    return os.str();
}

// deterministic train/val split when no separate validation directory is given
void split_dataset(const train::Dataset& all, double val_fraction, std::uint64_t seed,
                   train::Dataset& train_out, train::Dataset& val_out) {
    std::vector<int> order(all.scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(mix_seed(seed, 0x5117ULL));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
    const int val_count = std::min<int>(static_cast<int>(order.size()) - 1,
                                        std::max(1, static_cast<int>(val_fraction * order.size())));
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (static_cast<int>(i) < val_count)
            val_out.scenes.push_back(all.scenes[order[i]]);
        else
            train_out.scenes.push_back(all.scenes[order[i]]);
    }
}

int cmd_synth(const std::string& out_dir, int scenes, const std::string& config_path,
              const std::string& profile, std::uint64_t seed) {
    Config cfg = load_config(config_path, profile);
    fs::create_directories(out_dir);

    json manifest;
    manifest["scene_count"] = scenes;
    manifest["config_fingerprint"] = cfg.fingerprint();
    manifest["master_seed"] = seed;
    json entries = json::array();
    for (int i = 0; i < scenes; ++i) {
        SynthConfig sc = cfg.synth;
        sc.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        data::ScenePair pair = data::synth_rigid_scene(sc);
        const std::string name = scene_file_name(i);
        data::save_scene_pair(pair, (fs::path(out_dir) / name).string());
        entries.push_back({{"file", name}, {"seed", sc.seed}});
    }
    manifest["scenes"] = entries;
    write_text_atomic((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "wrote " << scenes << " scenes to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, const std::string& config_path,
              const std::string& profile, const std::string& val_dir, double val_fraction,
              const std::string& resume_path, int epochs_override) {
    Config cfg = load_config(config_path, profile);

    train::Checkpoint resume;
    const train::Checkpoint* resume_ptr = nullptr;
    if (!resume_path.empty()) {
        resume = train::Checkpoint::load(resume_path);
        cfg = resume.config;
        resume_ptr = &resume;
    }
    if (epochs_override > 0) cfg.train.epochs = epochs_override;

    train::Dataset train_set, val_set;
    if (!val_dir.empty()) {
        train_set = train::Dataset::load_dir(data_dir);
        val_set = train::Dataset::load_dir(val_dir);
    } else {
        split_dataset(train::Dataset::load_dir(data_dir), val_fraction, cfg.train.seed, train_set, val_set);
    }

    fs::create_directories(out_dir);
    cfg.save((fs::path(out_dir) / "config.ini").string());

    std::ostringstream log_lines;
    auto on_epoch = [&](const train::EpochLog& log) {
        json j = {{"epoch", log.epoch},
                  {"train_loss", log.train_loss},
                  {"val_epe3d", log.val_epe3d},
                  {"lr", log.lr}};
        log_lines << j.dump() << "\n";
        std::cout << "epoch " << log.epoch << " train_loss " << log.train_loss << " val_epe3d "
                  << log.val_epe3d << " lr " << log.lr << std::endl;
    };

    auto result = train::train(cfg, train_set, val_set, on_epoch, resume_ptr);
    result.best.save((fs::path(out_dir) / "best.ckpt").string());
    result.last.save((fs::path(out_dir) / "last.ckpt").string());
    write_text_atomic((fs::path(out_dir) / "metrics.jsonl").string(), log_lines.str());
    std::cout << "best epoch " << result.best_epoch << " val_epe3d " << result.best.best_val_epe << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, bool per_scene,
             const std::string& format, bool require_2d) {
    auto ck = train::Checkpoint::load(ckpt_path);
    model::Network net(ck.config, ck.config.train.seed);
    ck.apply_params(net);

    auto dataset = train::Dataset::load_dir(data_dir);
    if (dataset.empty()) throw DataError("eval: no scene files in " + data_dir);
    if (require_2d)
        for (const auto& s : dataset.scenes)
            if (!s.has_intrinsics())
                throw DataError("eval: 2D metrics requested but a scene has no intrinsics");
    auto result = train::evaluate(net, dataset, ck.config.train.workers);

    if (format == "structured") {
        json pooled = report_json(result.pooled);
        pooled["scope"] = "pooled";
        std::cout << pooled.dump() << "\n";
        json zero = report_json(result.zero_flow_pooled);
        zero["scope"] = "zero_flow_baseline";
        std::cout << zero.dump() << "\n";
        if (per_scene)
            for (std::size_t i = 0; i < result.per_scene.size(); ++i) {
                json row = report_json(result.per_scene[i].model);
                row["scope"] = "scene";
                row["index"] = i;
                std::cout << row.dump() << "\n";
            }
    } else {
        std::cout << "# pooled\n" << report_text(result.pooled);
        std::cout << "# zero_flow_baseline\n" << report_text(result.zero_flow_pooled);
        if (per_scene)
            for (std::size_t i = 0; i < result.per_scene.size(); ++i)
                std::cout << "# scene " << i << "\n" << report_text(result.per_scene[i].model);
    }
    return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& pair_path, const std::string& out_path) {
    auto ck = train::Checkpoint::load(ckpt_path);
    model::Network net(ck.config, ck.config.train.seed);
    ck.apply_params(net);

    auto pair = data::load_scene_pair(pair_path);
    auto pred = train::infer_flow(net, pair);

    data::ScenePair out = pair;
    out.extras.push_back(data::NamedArray::from_f32("flow_gt", pair.flow,
                                                    {static_cast<std::uint64_t>(pair.n()), 3}));
    out.flow = pred;
    data::save_scene_pair(out, out_path);
    std::cout << "wrote prediction for " << pair.n() << " points to " << out_path << "\n";
    return 0;
}

int cmd_ablate(const std::string& data_dir, const std::string& out_dir, const std::string& config_path,
               const std::string& profile, const std::string& val_dir, double val_fraction,
               const std::string& seeds_arg, int epochs_override) {
    Config cfg = load_config(config_path, profile);
    if (epochs_override > 0) cfg.train.epochs = epochs_override;

    std::vector<std::uint64_t> seeds;
    {
        std::stringstream ss(seeds_arg);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw DataError("ablate: no seeds given");

    train::Dataset train_set, val_set;
    if (!val_dir.empty()) {
        train_set = train::Dataset::load_dir(data_dir);
        val_set = train::Dataset::load_dir(val_dir);
    } else {
        split_dataset(train::Dataset::load_dir(data_dir), val_fraction, cfg.train.seed, train_set, val_set);
    }

    fs::create_directories(out_dir);
    std::ostringstream rows_out;
    auto on_row = [&](const train::AblationRow& row) {
        json j = {{"variant", row.variant}, {"seed", row.seed}, {"epe3d", row.heldout.epe3d}};
        rows_out << j.dump() << "\n";
        std::cout << "variant " << row.variant << " seed " << row.seed << " epe3d " << row.heldout.epe3d
                  << std::endl;
    };
    auto rows = train::run_ablation(cfg, train_set, val_set, seeds, on_row);

    std::ostringstream table;
    table << "variant median_epe3d\n";
    for (const auto& v : {"full", "no_gf", "no_str", "no_da"})
        table << v << " " << train::median_epe(rows, v) << "\n";
    write_text_atomic((fs::path(out_dir) / "ablation_rows.jsonl").string(), rows_out.str());
    write_text_atomic((fs::path(out_dir) / "ablation_table.txt").string(), table.str());
    std::cout << table.str();
    return 0;
}

int cmd_plot(const std::string& pair_path, const std::string& pred_path, const std::string& out_path,
             double threshold) {
    auto pair = data::load_scene_pair(pair_path);
    std::vector<float> pred = pair.flow;  // default: warp by ground truth
    if (!pred_path.empty()) {
        auto pp = data::load_scene_pair(pred_path);
        if (pp.n() != pair.n()) throw DataError("plot: prediction point count differs from the pair");
        pred = pp.flow;
        if (const auto* gt = data::find_array(pp.extras, "flow_gt"); gt && pred_path != pair_path)
            pair.flow = gt->as_f32();
    }

    const int n = pair.n();
    std::vector<float> warped(pair.pos1.size());
    for (std::size_t i = 0; i < warped.size(); ++i) warped[i] = pair.pos1[i] + pred[i];

    // orthographic projection onto the xy plane
    float lo[2] = {pair.pos1[0], pair.pos1[1]}, hi[2] = {lo[0], lo[1]};
    auto stretch = [&](const std::vector<float>& pts) {
        for (std::size_t i = 0; i < pts.size() / 3; ++i)
            for (int c = 0; c < 2; ++c) {
                lo[c] = std::min(lo[c], pts[3 * i + c]);
                hi[c] = std::max(hi[c], pts[3 * i + c]);
            }
    };
    stretch(pair.pos1);
    stretch(warped);
    const double span = std::max({1e-9f, hi[0] - lo[0], hi[1] - lo[1]});
    const double size = 800.0, pad = 20.0;
    auto sx = [&](float x) { return pad + (x - lo[0]) / span * (size - 2 * pad); };
    auto sy = [&](float y) { return size - pad - (y - lo[1]) / span * (size - 2 * pad); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    char buf[128];
    auto emit = [&](double x, double y, const char* color) {
        std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.6\" fill=\"%s\"/>\n", x, y,
                      color);
        svg << buf;
    };
    for (int i = 0; i < n; ++i) emit(sx(pair.pos1[3 * i]), sy(pair.pos1[3 * i + 1]), "#3b6fd4");
    std::vector<int> bad;
    for (int i = 0; i < n; ++i) {
        double e2 = 0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred[3 * i + c] - pair.flow[3 * i + c];
            e2 += d * d;
        }
        if (std::sqrt(e2) > threshold)
            bad.push_back(i);
        else
            emit(sx(warped[3 * i]), sy(warped[3 * i + 1]), "#2e9e4f");
    }
    for (int i : bad) emit(sx(warped[3 * i]), sy(warped[3 * i + 1]), "#d43b3b");
    svg << "</svg>\n";
    write_text_atomic(out_path, svg.str());
    std::cout << "wrote " << out_path << " (" << bad.size() << " points above threshold)\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Scene-flow estimation toolkit: synthesis, training, evaluation, inference"};
    app.require_subcommand(1);

    std::string config_path, profile = "desk";
    std::string out_dir, data_dir, val_dir, ckpt_path, pair_path, pred_path, out_path;
    std::string format = "text", seeds_arg = "1,2,3", resume_path;
    int scenes = 1, epochs_override = 0;
    std::uint64_t seed = 1;
    double val_fraction = 0.2, threshold = 0.1;
    bool per_scene = false, require_2d = false;

    auto* synth = app.add_subcommand("synth", "Generate synthetic rigid-motion scene pairs");
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_option("--scenes", scenes, "Number of scenes")->required();
    synth->add_option("--config", config_path, "Config file (or $SCENEFLOW_CONFIG)");
    synth->add_option("--profile", profile, "Built-in profile: desk|paper");
    synth->add_option("--seed", seed, "Master seed");

    auto* tr = app.add_subcommand("train", "Train the estimator on a scene directory");
    tr->add_option("--data", data_dir, "Training scene directory")->required();
    tr->add_option("--out", out_dir, "Output directory")->required();
    tr->add_option("--config", config_path, "Config file (or $SCENEFLOW_CONFIG)");
    tr->add_option("--profile", profile, "Built-in profile: desk|paper");
    tr->add_option("--val-data", val_dir, "Validation scene directory");
    tr->add_option("--val-fraction", val_fraction, "Held-out fraction when --val-data is absent");
    tr->add_option("--resume", resume_path, "Checkpoint to resume from");
    tr->add_option("--epochs", epochs_override, "Override the configured epoch count");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
    ev->add_option("--data", data_dir, "Scene directory")->required();
    ev->add_flag("--per-scene", per_scene, "Also report each scene");
    ev->add_option("--format", format, "text|structured");
    ev->add_flag("--with-2d", require_2d, "Fail if 2D metrics cannot be computed");

    auto* in = app.add_subcommand("infer", "Predict flow for one scene pair");
    in->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
    in->add_option("--pair", pair_path, "Input scene pair")->required();
    in->add_option("--out", out_path, "Output scene pair")->required();

    auto* ab = app.add_subcommand("ablate", "Train and compare module-switch variants");
    ab->add_option("--data", data_dir, "Training scene directory")->required();
    ab->add_option("--out", out_dir, "Output directory")->required();
    ab->add_option("--config", config_path, "Config file (or $SCENEFLOW_CONFIG)");
    ab->add_option("--profile", profile, "Built-in profile: desk|paper");
    ab->add_option("--val-data", val_dir, "Validation scene directory");
    ab->add_option("--val-fraction", val_fraction, "Held-out fraction when --val-data is absent");
    ab->add_option("--seeds", seeds_arg, "Comma-separated seeds");
    ab->add_option("--epochs", epochs_override, "Override the configured epoch count");

    auto* pl = app.add_subcommand("plot", "Render a scene pair to a static SVG image");
    pl->add_option("--pair", pair_path, "Scene pair with ground truth")->required();
    pl->add_option("--pred", pred_path, "Prediction pair (from infer)");
    pl->add_option("--out", out_path, "Output image file")->required();
    pl->add_option("--threshold", threshold, "Error highlight threshold (EPE3D)");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(out_dir, scenes, config_path, profile, seed);
        if (tr->parsed())
            return cmd_train(data_dir, out_dir, config_path, profile, val_dir, val_fraction, resume_path,
                             epochs_override);
        if (ev->parsed()) return cmd_eval(ckpt_path, data_dir, per_scene, format, require_2d);
        if (in->parsed()) return cmd_infer(ckpt_path, pair_path, out_path);
        if (ab->parsed())
            return cmd_ablate(data_dir, out_dir, config_path, profile, val_dir, val_fraction, seeds_arg,
                              epochs_override);
        if (pl->parsed()) return cmd_plot(pair_path, pred_path, out_path, threshold);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace sf::cli
