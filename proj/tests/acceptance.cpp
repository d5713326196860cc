// Acceptance suite. Each test case prints one [PASS]/[FAIL] line; the full
// set covers kernel oracles, gradient checks, identities and invariants, the
// single-scene overfit, small-scale generalization, ablation direction, the
// radius-truncation consistency trend, and the hand-checked metric values.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "sceneflow/config.hpp"
#include "sceneflow/core/error.hpp"
#include "sceneflow/core/rng.hpp"
#include "sceneflow/data/gt.hpp"
#include "sceneflow/data/synth.hpp"
#include "sceneflow/eval/metrics.hpp"
#include "sceneflow/loss/losses.hpp"
#include "sceneflow/model/network.hpp"
#include "sceneflow/train/trainer.hpp"
#include "support/grad_check.hpp"
#include "support/oracles.hpp"

using namespace sf;
using sf::test::points_tensor;
using sf::test::random_points;

namespace {

struct Verdict {
    bool pass = true;
    void require(bool ok) { pass = pass && ok; }
    void finish(int criterion, const char* what) const {
        std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what);
        std::fflush(stdout);
        CHECK(pass);
    }
};

Tensor random_tensor(Rng& rng, int r, int c, bool grad = false) {
    std::vector<double> d(static_cast<std::size_t>(r) * c);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    return Tensor::from(std::move(d), r, c, grad);
}

Config reduced_cfg() {
    Config cfg;
    cfg.model.levels = 2;
    cfg.model.level_sizes = {12, 4};
    cfg.model.feature_widths = {4, 5};
    cfg.model.backbone_k = 4;
    cfg.model.pointconv_weight_hidden = 5;
    cfg.model.d_a = 4;
    cfg.model.heads = 2;
    cfg.model.pe_mlp_width = 5;
    cfg.model.d_g = 6;
    cfg.model.str_k = 3;
    cfg.model.str_hidden = 6;
    cfg.model.lm_pe_width = 4;
    cfg.model.lfe_k_target = 3;
    cfg.model.lfe_k_self = 3;
    cfg.model.cost_hidden = 6;
    cfg.model.dir_hidden = 4;
    cfg.model.fp_k = 3;
    cfg.model.fp_pointconv_width = 6;
    cfg.model.fp_mlp_width = 5;
    return cfg;
}

// generation config for the training-based criteria
SynthConfig desk_synth(std::uint64_t seed) {
    SynthConfig sc;
    sc.object_count = 2;
    sc.points_per_object = 1024;
    sc.rotation_max = 0.3;
    sc.translation_max = 0.2;
    sc.noise_sigma = 0.0;
    sc.occlusion_fraction = 0.0;
    sc.seed = seed;
    return sc;
}

train::Dataset synth_dataset(int scenes, std::uint64_t seed, int points_per_object) {
    train::Dataset ds;
    for (int i = 0; i < scenes; ++i) {
        SynthConfig sc = desk_synth(mix_seed(seed, i));
        sc.points_per_object = points_per_object;
        ds.scenes.push_back(data::synth_rigid_scene(sc));
    }
    return ds;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TEST_CASE("criterion 1: kernel and metric oracle suite") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    Rng rng(20250801);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + rng.uniform_int(63);
        const int nq = 1 + rng.uniform_int(16);
        auto ref = random_points(rng, n);
        auto qry = random_points(rng, nq);
        Tensor tref = points_tensor(ref);
        Tensor tqry = points_tensor(qry);

        const int m = 1 + rng.uniform_int(n);
        const int seed = rng.uniform_int(n);
        v.require(geom::fps(tref, m, seed) == sf::test::fps_oracle(ref, n, m, seed));

        const int k = 1 + rng.uniform_int(std::min(8, n));
        auto nn = geom::knn(tqry, tref, k);
        auto nn_ref = sf::test::knn_oracle(qry, nq, ref, n, k);
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < k; ++j) v.require(nn.indices[i * k + j] == nn_ref[i][j]);

        const double radius = rng.uniform(0.05, 1.5);
        auto nr = geom::knn_radius(tqry, tref, k, radius);
        auto nr_ref = sf::test::knn_radius_oracle(qry, nq, ref, n, k, radius);
        for (int i = 0; i < nq; ++i) {
            v.require(nr.group_size(i) == static_cast<int>(nr_ref[i].size()));
            for (int j = 0; j < nr.group_size(i) && v.pass; ++j)
                v.require(nr.indices[nr.offsets[i] + j] == nr_ref[i][j]);
        }
    }

    // metrics against a per-point loop, exact equality
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + rng.uniform_int(64);
        std::vector<float> pos(3 * n), gt(3 * n), pred(3 * n);
        for (auto& x : pos) x = static_cast<float>(rng.uniform(-2, 2));
        for (auto& x : gt) x = static_cast<float>(rng.uniform(-0.3, 0.3));
        for (auto& x : pred) x = static_cast<float>(rng.uniform(-0.3, 0.3));
        auto r = metrics::compute_metrics(pos, pred, gt);

        double sum = 0;
        long long as = 0, ar = 0, out = 0;
        for (int i = 0; i < n; ++i) {
            double e2 = 0, g2 = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = pred[3 * i + c] - gt[3 * i + c];
                e2 += d * d;
                g2 += static_cast<double>(gt[3 * i + c]) * gt[3 * i + c];
            }
            const double epe = std::sqrt(e2);
            const double rel = epe / std::max(std::sqrt(g2), 1e-8);
            sum += epe;
            as += (epe < 0.05 || rel < 0.05);
            ar += (epe < 0.1 || rel < 0.1);
            out += (epe > 0.3 || rel > 0.3);
        }
        v.require(r.epe3d == sum / n);
        v.require(r.as3d == double(as) / n);
        v.require(r.ar3d == double(ar) / n);
        v.require(r.out3d == double(out) / n);
    }

    v.require(elapsed_s(start) < 30.0);
    v.finish(1, "fps/knn/knn_radius and metrics match exhaustive oracles exactly");
}

TEST_CASE("criterion 2: finite-difference gradient suite") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    const double tol = 1e-4;
    auto cfg = reduced_cfg();

    {  // pointconv layer
        Rng prng(1), rng(2);
        nn::ParamStore ps;
        model::PointConvLayer layer(ps, "pc", 3, 4, 5, 0.1, prng);
        Tensor pos = points_tensor(random_points(rng, 8));
        Tensor feat = random_tensor(rng, 8, 3, true);
        Tensor centers = points_tensor(random_points(rng, 3));
        auto nnbr = geom::knn(centers, pos, 4);
        std::vector<Tensor> leaves = {feat};
        for (const auto& name : ps.names()) leaves.push_back(ps.get(name));
        auto res = sf::test::grad_check(
            [&] {
                Tensor out = layer(pos, feat, centers, nnbr);
                return mean_all(mul(out, out));
            },
            leaves);
        v.require(res.max_rel_err < tol);
    }
    {  // full gf module, inputs and params
        Rng prng(3), rng(4);
        nn::ParamStore ps;
        model::GlobalFusion gf(ps, cfg.model, prng);
        const int n = 8, m = 8;
        const int d_top = cfg.model.feature_widths.back();
        Tensor sfeat = random_tensor(rng, n, d_top, true);
        Tensor tfeat = random_tensor(rng, m, d_top, true);
        Tensor spos = Tensor::from(random_points(rng, n), n, 3, true);
        Tensor tpos = Tensor::from(random_points(rng, m), m, 3, true);
        Tensor probe = random_tensor(rng, n, cfg.model.d_g);
        std::vector<Tensor> leaves = {sfeat, tfeat, spos, tpos};
        for (const auto& name : ps.names()) leaves.push_back(ps.get(name));
        auto res = sf::test::grad_check(
            [&] { return mean_all(mul(gf(sfeat, tfeat, spos, tpos).gffe, probe)); }, leaves);
        v.require(res.max_rel_err < tol);
    }
    {  // temporal + spatial re-embedding and the fusion mlp
        Rng prng(5), rng(6);
        nn::ParamStore ps;
        const int d = 4;
        model::ReembedBlock temporal(ps, "t", d, d, d, cfg.model, prng);
        model::ReembedBlock spatial(ps, "s", d, d, d, cfg.model, prng);
        nn::Mlp fuse(ps, "fuse", {2 * d, d}, 0.1, prng);
        const int n = 6, m = 7;
        Tensor qpos = points_tensor(random_points(rng, n));
        Tensor qfeat = random_tensor(rng, n, d, true);
        Tensor tpos = points_tensor(random_points(rng, m));
        Tensor tfeat = random_tensor(rng, m, d, true);
        auto nn_t = geom::knn(qpos, tpos, 3);
        auto nn_s = geom::knn(qpos, qpos, 3);
        Tensor probe = random_tensor(rng, n, d);
        std::vector<Tensor> leaves = {qfeat, tfeat};
        for (const auto& name : ps.names()) leaves.push_back(ps.get(name));
        auto res = sf::test::grad_check(
            [&] {
                auto t = temporal(qpos, qfeat, tpos, tfeat, nn_t);
                auto s = spatial(qpos, qfeat, qpos, qfeat, nn_s);
                return mean_all(mul(fuse(concat_cols({t.reembedded, s.reembedded})), probe));
            },
            leaves);
        v.require(res.max_rel_err < tol);
    }
    {  // cost volume
        Rng prng(7), rng(8);
        nn::ParamStore ps;
        const int d = 4;
        model::CostVolumeLayer cv(ps, "cv", d, d, cfg.model, prng);
        const int n = 6, m = 6;
        Tensor wpos = Tensor::from(random_points(rng, n), n, 3, true);
        Tensor wfeat = random_tensor(rng, n, d, true);
        Tensor tpos = points_tensor(random_points(rng, m));
        Tensor tfeat = random_tensor(rng, m, d, true);
        auto nn_t = geom::knn(wpos, tpos, 3);
        auto nn_s = geom::knn(wpos, wpos, 3);
        Tensor probe = random_tensor(rng, n, d);
        std::vector<Tensor> leaves = {wpos, wfeat, tfeat};
        for (const auto& name : ps.names()) leaves.push_back(ps.get(name));
        auto res = sf::test::grad_check(
            [&] { return mean_all(mul(cv(wpos, wfeat, tpos, tfeat, nn_t, nn_s), probe)); }, leaves);
        v.require(res.max_rel_err < tol);
    }
    {  // flow predictor (nonzero head so the probe reaches every path)
        Rng prng(9), rng(10);
        nn::ParamStore ps;
        model::FlowPredictor fp(ps, "fp", 5, cfg.model, prng);
        for (auto& w : fp.out.w.mutable_data()) w = rng.uniform(-0.2, 0.2);
        const int n = 8;
        Tensor pos = points_tensor(random_points(rng, n));
        Tensor feat = random_tensor(rng, n, 5, true);
        auto nnbr = geom::knn(pos, pos, 3);
        Tensor probe = random_tensor(rng, n, 3);
        std::vector<Tensor> leaves = {feat};
        for (const auto& name : ps.names()) leaves.push_back(ps.get(name));
        auto res = sf::test::grad_check([&] { return mean_all(mul(fp(pos, feat, nnbr), probe)); }, leaves);
        v.require(res.max_rel_err < tol);
    }
    {  // the three losses
        Rng rng(11);
        const int n = 16;
        Tensor pos = points_tensor(random_points(rng, n));
        Tensor pred0 = random_tensor(rng, n, 3, true);
        Tensor pred1 = random_tensor(rng, 5, 3, true);
        Tensor gt0 = random_tensor(rng, n, 3);
        Tensor gt1 = random_tensor(rng, 5, 3);
        auto res_sup = sf::test::grad_check(
            [&] {
                return loss::supervised_loss({pred0, pred1}, {gt0, gt1}, {0.02, 0.04});
            },
            {pred0, pred1});
        v.require(res_sup.max_rel_err < tol);

        Tensor flow = random_tensor(rng, n, 3, true);
        auto nnr = geom::knn_radius(pos, pos, 4, 1.0);
        auto res_lfc =
            sf::test::grad_check([&] { return loss::lfc_loss(flow, nnr).value; }, {flow});
        v.require(res_lfc.max_rel_err < tol);

        Tensor wf = random_tensor(rng, n, 5, true);
        Tensor tf = random_tensor(rng, n, 5, true);
        auto res_cfs = sf::test::grad_check(
            [&] { return loss::cfs_loss(wf, tf, nnr, 0.3); }, {wf, tf});
        v.require(res_cfs.max_rel_err < tol);
    }

    v.require(elapsed_s(start) < 300.0);
    v.finish(2, "analytic gradients match central finite differences below 1e-4");
}

TEST_CASE("criterion 3: identity and invariant suite") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    Rng rng(33);

    {  // warp identity, bitwise
        Tensor pos = points_tensor(random_points(rng, 32));
        v.require(model::warp(pos, Tensor::zeros(32, 3)).data() == pos.data());
    }
    {  // attention and aggregation rows sum to one
        Rng prng(1);
        nn::ParamStore ps;
        auto cfg = reduced_cfg();
        model::GlobalFusion gf(ps, cfg.model, prng);
        const int d_top = cfg.model.feature_widths.back();
        auto out = gf(random_tensor(rng, 6, d_top), random_tensor(rng, 7, d_top),
                      points_tensor(random_points(rng, 6)), points_tensor(random_points(rng, 7)));
        auto rows_sum_one = [&](const Tensor& t) {
            for (int i = 0; i < t.rows(); ++i) {
                double s = 0;
                for (int j = 0; j < t.cols(); ++j) s += t.at(i, j);
                if (std::abs(s - 1.0) > 1e-6) return false;
            }
            return true;
        };
        v.require(rows_sum_one(out.dca.attn_s_to_t));
        v.require(rows_sum_one(out.dca.attn_t_to_s));
        v.require(rows_sum_one(out.weights));
    }
    {  // neighbor-order invariance of the grouped aggregations
        Rng prng(2);
        nn::ParamStore ps;
        auto cfg = reduced_cfg();
        const int d = 4;
        model::ReembedBlock block(ps, "re", d, d, d, cfg.model, prng);
        model::CostVolumeLayer cv(ps, "cv", d, d, cfg.model, prng);
        const int n = 8;
        Tensor wpos = points_tensor(random_points(rng, n));
        Tensor wfeat = random_tensor(rng, n, d);
        Tensor tpos = points_tensor(random_points(rng, n));
        Tensor tfeat = random_tensor(rng, n, d);
        auto nn_t = geom::knn(wpos, tpos, 4);
        auto nn_s = geom::knn(wpos, wpos, 4);
        auto permuted = [&](geom::NeighborSet s) {
            for (int q = 0; q < s.query_count; ++q)
                std::reverse(s.indices.begin() + s.offsets[q], s.indices.begin() + s.offsets[q + 1]);
            return s;
        };
        Tensor a = cv(wpos, wfeat, tpos, tfeat, nn_t, nn_s);
        Tensor b = cv(wpos, wfeat, tpos, tfeat, permuted(nn_t), permuted(nn_s));
        for (std::size_t i = 0; i < a.data().size(); ++i)
            v.require(std::abs(a.data()[i] - b.data()[i]) <= 1e-6 * std::max(1.0, std::abs(a.data()[i])));
        auto r1 = block(wpos, wfeat, tpos, tfeat, nn_t).reembedded;
        auto r2 = block(wpos, wfeat, tpos, tfeat, permuted(nn_t)).reembedded;
        for (std::size_t i = 0; i < r1.data().size(); ++i)
            v.require(std::abs(r1.data()[i] - r2.data()[i]) <= 1e-6 * std::max(1.0, std::abs(r1.data()[i])));
    }
    {  // loss identities
        Tensor pred = random_tensor(rng, 10, 3);
        v.require(loss::supervised_loss({pred}, {pred}, {0.02}).data()[0] == 0.0);

        Tensor pos = points_tensor(random_points(rng, 10));
        auto nnr = geom::knn_radius(pos, pos, 4, 1.5);
        v.require(loss::lfc_loss(Tensor::full(10, 3, 0.4), nnr).value.data()[0] == 0.0);

        // all in-radius similarities equal 1 >= th
        const std::vector<double> dir = {1.0, 0.5, -0.25, 0.125};
        std::vector<double> a(40), b(40);
        for (int i = 0; i < 10; ++i)
            for (int c = 0; c < 4; ++c) {
                a[4 * i + c] = (0.5 + 0.1 * i) * dir[c];
                b[4 * i + c] = (2.0 - 0.1 * i) * dir[c];
            }
        v.require(loss::cfs_loss(Tensor::from(a, 10, 4), Tensor::from(b, 10, 4), nnr, 0.95).data()[0] <
                  1e-9);
    }
    {  // relaxed accuracy dominates strict accuracy on random reports
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 1 + rng.uniform_int(40);
            std::vector<float> pos(3 * n), gt(3 * n), pred(3 * n);
            for (auto& x : pos) x = static_cast<float>(rng.uniform(-2, 2));
            for (auto& x : gt) x = static_cast<float>(rng.uniform(-0.3, 0.3));
            for (auto& x : pred) x = static_cast<float>(rng.uniform(-0.3, 0.3));
            auto r = metrics::compute_metrics(pos, pred, gt);
            v.require(r.ar3d >= r.as3d);
        }
    }

    v.require(elapsed_s(start) < 60.0);
    v.finish(3, "identities, normalization and order-invariance hold");
}

TEST_CASE("criterion 4: single-scene overfit") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;

    // 512-point scene, 2 objects, translation-dominant rigid motion, no noise
    SynthConfig sc = desk_synth(42);
    sc.points_per_object = 256;
    sc.rotation_max = 0.15;
    sc.translation_max = 0.3;
    train::Dataset ds;
    ds.scenes.push_back(data::synth_rigid_scene(sc));

    // overfit recipe: supervised loss only, one fixed input view, annealed lr
    Config cfg;  // desk-scale model
    cfg.loss.lambda2 = 0.0;
    cfg.loss.lambda3 = 0.0;
    cfg.loss.use_lfc = false;
    cfg.loss.use_cfs = false;
    cfg.train.batch_size = 1;
    cfg.train.epochs = 700;  // one scene, so one optimizer step per epoch
    cfg.train.patience = 0;
    cfg.train.workers = 1;
    cfg.train.learning_rate = 0.005;
    cfg.train.decay_every = 150;
    cfg.train.resample_per_epoch = false;

    auto result = train::train(cfg, ds, {});
    model::Network net(cfg, cfg.train.seed);
    result.last.apply_params(net);
    auto ev = train::evaluate(net, ds, 2, cfg.train.seed);  // the trained view

    const double mean_gt = ev.zero_flow_pooled.epe3d;  // zero-flow epe = mean |gt|
    const double ratio = ev.pooled.epe3d / mean_gt;
    std::printf("  overfit: epe3d %.6f, mean |gt| %.6f, ratio %.4f (target < 0.01), %d steps, %.0f s\n",
                ev.pooled.epe3d, mean_gt, ratio, static_cast<int>(result.last.adam_t), elapsed_s(start));
    v.require(result.last.adam_t <= 1000);
    v.require(ratio < 0.01);
    v.finish(4, "single-scene overfit drives epe3d below 1% of the mean flow magnitude");
}

TEST_CASE("criterion 5: small-scale generalization") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;

    auto train_set = synth_dataset(200, 1000, 1024);
    auto val_set = synth_dataset(50, 2000, 1024);

    Config cfg;  // desk-scale model
    cfg.train.epochs = 20;
    cfg.train.patience = 0;
    cfg.train.workers = 2;
    cfg.train.learning_rate = 0.002;
    cfg.train.decay_every = 5;

    auto result = train::train(cfg, train_set, val_set);
    model::Network net(cfg, cfg.train.seed);
    result.best.apply_params(net);
    auto ev = train::evaluate(net, val_set, 2);

    const double ratio = ev.pooled.epe3d / ev.zero_flow_pooled.epe3d;
    std::printf("  generalization: held-out epe3d %.6f vs zero-flow %.6f, ratio %.3f (target <= 0.5), %.0f s\n",
                ev.pooled.epe3d, ev.zero_flow_pooled.epe3d, ratio, elapsed_s(start));
    v.require(cfg.train.epochs <= 100);
    v.require(ratio <= 0.5);
    v.require(elapsed_s(start) < 3600.0);
    v.finish(5, "held-out epe3d is at most half the zero-flow baseline");
}

TEST_CASE("criterion 6: ablation direction") {
    Verdict v;

    auto train_set = synth_dataset(200, 1000, 1024);
    auto val_set = synth_dataset(50, 2000, 1024);

    Config cfg;  // setup of criterion 5, shorter schedule
    cfg.train.epochs = 5;
    cfg.train.patience = 0;
    cfg.train.workers = 2;

    auto rows = train::run_ablation(cfg, train_set, val_set, {1, 2, 3}, [](const train::AblationRow& r) {
        std::printf("  ablation %s seed %llu: epe3d %.6f\n", r.variant.c_str(),
                    static_cast<unsigned long long>(r.seed), r.heldout.epe3d);
        std::fflush(stdout);
    });

    const double full = train::median_epe(rows, "full");
    const double no_gf = train::median_epe(rows, "no_gf");
    const double no_str = train::median_epe(rows, "no_str");
    const double no_da = train::median_epe(rows, "no_da");
    std::printf("  medians: full %.6f, no_gf %.6f, no_str %.6f, no_da %.6f\n", full, no_gf, no_str, no_da);
    v.require(full <= no_gf);
    v.require(full <= no_str);
    v.require(full <= no_da);
    v.finish(6, "median held-out epe3d of the full model is no worse than each ablation");
}

TEST_CASE("criterion 7: radius truncation lowers local ground-truth flow differences") {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;

    const int kScenes = 50;
    const int k = 32;
    int agree = 0;
    long long nonempty_cross = 0;
    for (int s = 0; s < kScenes; ++s) {
        SynthConfig sc = desk_synth(mix_seed(7000, s));
        sc.object_count = 2;
        sc.points_per_object = 4096;  // dense surfaces so the radius keeps real neighbors
        auto pair = data::synth_rigid_scene(sc);
        const double radius = 0.05 * data::scene_diameter(pair) / 20.0;

        Tensor pos = pair.pos1_tensor();
        Tensor gt = pair.flow_tensor();
        auto nn_plain = geom::knn(pos, pos, k);
        auto nn_radius = geom::knn_radius(pos, pos, k, radius);

        const double with_radius = loss::lfc_loss(gt, nn_radius).value.data()[0];
        const double plain = loss::lfc_loss(gt, nn_plain).value.data()[0];
        agree += with_radius <= plain;
        for (int q = 0; q < nn_radius.query_count; ++q) nonempty_cross += nn_radius.group_size(q) > 1;
    }
    std::printf("  radius consistency: %d/%d scenes satisfy radius <= knn; %lld groups kept >1 member\n",
                agree, kScenes, nonempty_cross);
    v.require(agree >= static_cast<int>(0.95 * kScenes));
    v.require(nonempty_cross > 0);  // the comparison is not vacuous
    v.require(elapsed_s(start) < 120.0);
    v.finish(7, "knn+radius local flow differences are no larger than pure knn on >= 95% of scenes");
}

TEST_CASE("criterion 8: hand-checked metric values and pinned thresholds") {
    Verdict v;

    {  // worked example: epe 0.04 -> strictly accurate
        std::vector<float> pos = {0, 0, 0};
        std::vector<float> gt = {1, 0, 0};
        std::vector<float> pred = {1.04f, 0, 0};
        auto r = metrics::compute_metrics(pos, pred, gt);
        v.require(std::abs(r.epe3d - 0.04) < 1e-6);
        v.require(r.as3d == 1.0);
        v.require(r.ar3d == 1.0);
        v.require(r.out3d == 0.0);
    }
    {  // identity case
        std::vector<float> pos = {0, 0, 0, 1, 1, 1};
        std::vector<float> gt = {0.2f, 0, 0, 0, 0.1f, 0};
        auto r = metrics::compute_metrics(pos, gt, gt);
        v.require(r.epe3d == 0.0);
        v.require(r.as3d == 1.0);
        v.require(r.out3d == 0.0);
    }
    {  // pinned constants
        v.require(metrics::kAccStrictEpe == 0.05);
        v.require(metrics::kAccRelaxEpe == 0.1);
        v.require(metrics::kOutlierEpe == 0.3);
        v.require(metrics::kAcc2dPx == 3.0);
        v.require(metrics::kAccStrictRel == 0.05);
        v.require(metrics::kAccRelaxRel == 0.1);
        v.require(metrics::kOutlierRel == 0.3);
    }
    {  // a point just over the strict bar lands in the relaxed band
        std::vector<float> pos = {0, 0, 0};
        std::vector<float> gt = {2, 0, 0};
        std::vector<float> pred = {2.08f, 0, 0};
        auto r = metrics::compute_metrics(pos, pred, gt);
        v.require(r.as3d == 1.0);  // relative error 4% < 5%
        std::vector<float> pred2 = {2.15f, 0, 0};  // epe 0.15, relative 7.5%
        auto r2 = metrics::compute_metrics(pos, pred2, gt);
        v.require(r2.as3d == 0.0);
        v.require(r2.ar3d == 1.0);
    }

    v.finish(8, "worked metric examples pass with the published thresholds");
}
