#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sceneflow/config.hpp"
#include "sceneflow/core/error.hpp"
#include "sceneflow/core/rng.hpp"
#include "sceneflow/data/archive.hpp"
#include "sceneflow/data/gt.hpp"
#include "sceneflow/data/scene_pair.hpp"
#include "sceneflow/data/synth.hpp"
#include "sceneflow/geom/kernels.hpp"
#include "sceneflow/model/backbone.hpp"

using namespace sf;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() / ("sf_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

data::ScenePair random_pair(Rng& rng, int n, int m, bool mask, bool intr) {
    data::ScenePair p;
    for (int i = 0; i < 3 * n; ++i) p.pos1.push_back(static_cast<float>(rng.uniform(-1, 1)));
    for (int i = 0; i < 3 * m; ++i) p.pos2.push_back(static_cast<float>(rng.uniform(-1, 1)));
    for (int i = 0; i < 3 * n; ++i) p.flow.push_back(static_cast<float>(rng.uniform(-0.1, 0.1)));
    if (mask)
        for (int i = 0; i < n; ++i) p.mask.push_back(rng.uniform() < 0.8 ? 1 : 0);
    if (intr) p.intrinsics = {100, 0, 50, 0, 100, 50, 0, 0, 1};
    return p;
}

}  // namespace

TEST_CASE("scene pair round-trips bitwise including extras") {
    TmpDir tmp;
    Rng rng(1);
    auto pair = random_pair(rng, 17, 13, true, true);
    pair.extras.push_back(data::NamedArray::from_f32("custom_field", {1.5f, 2.5f}, {2}));

    const auto path = tmp.file("pair.sfp");
    data::save_scene_pair(pair, path);
    auto loaded = data::load_scene_pair(path);

    CHECK(loaded.pos1 == pair.pos1);
    CHECK(loaded.pos2 == pair.pos2);
    CHECK(loaded.flow == pair.flow);
    CHECK(loaded.mask == pair.mask);
    CHECK(loaded.intrinsics == pair.intrinsics);
    REQUIRE(loaded.extras.size() == 1);
    CHECK(loaded.extras[0].name == "custom_field");
    CHECK(loaded.extras[0].as_f32() == std::vector<float>{1.5f, 2.5f});

    // saving the loaded pair reproduces the file byte-for-byte
    const auto path2 = tmp.file("pair2.sfp");
    data::save_scene_pair(loaded, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("loader errors name the offending field") {
    TmpDir tmp;
    Rng rng(2);
    auto pair = random_pair(rng, 5, 5, false, false);

    {  // missing flow
        std::vector<data::NamedArray> arrays = {
            data::NamedArray::from_f32("pos1", pair.pos1, {5, 3}),
            data::NamedArray::from_f32("pos2", pair.pos2, {5, 3}),
        };
        const auto path = tmp.file("missing_flow.sfp");
        data::write_archive(path, arrays);
        CHECK_THROWS_WITH_AS(data::load_scene_pair(path), doctest::Contains("flow"), DataError);
    }
    {  // wrong mask length
        auto bad = pair;
        bad.mask = {1, 1};
        CHECK_THROWS_WITH_AS(data::save_scene_pair(bad, tmp.file("x.sfp")), doctest::Contains("mask"),
                             DataError);
    }
    {  // wrong dtype for pos1
        std::vector<data::NamedArray> arrays = {
            data::NamedArray::from_u8("pos1", std::vector<std::uint8_t>(15, 0), {5, 3}),
            data::NamedArray::from_f32("pos2", pair.pos2, {5, 3}),
            data::NamedArray::from_f32("flow", pair.flow, {5, 3}),
        };
        const auto path = tmp.file("bad_dtype.sfp");
        data::write_archive(path, arrays);
        CHECK_THROWS_WITH_AS(data::load_scene_pair(path), doctest::Contains("pos1"), DataError);
    }
    {  // bad magic
        const auto path = tmp.file("bad_magic.sfp");
        std::ofstream out(path, std::ios::binary);
        out << "NOTANARCHIVE";
        out.close();
        CHECK_THROWS_AS(data::load_scene_pair(path), DataError);
    }
}

TEST_CASE("synth: zero motion gives zero flow") {
    SynthConfig sc;
    sc.object_count = 2;
    sc.points_per_object = 64;
    sc.rotation_max = 0.0;
    sc.translation_max = 0.0;
    sc.noise_sigma = 0.0;
    sc.seed = 5;
    auto pair = data::synth_rigid_scene(sc);
    for (float f : pair.flow) CHECK(f == 0.0f);
    CHECK(pair.n() == 128);
    CHECK(pair.m() == 128);
}

TEST_CASE("synth: per-point correspondence when noise and occlusion are off") {
    SynthConfig sc;
    sc.object_count = 3;
    sc.points_per_object = 50;
    sc.rotation_max = 0.3;
    sc.translation_max = 0.1;
    sc.seed = 6;
    auto pair = data::synth_rigid_scene(sc);
    REQUIRE(pair.m() == pair.n());
    for (int i = 0; i < pair.n(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(pair.pos1[3 * i + c] + pair.flow[3 * i + c] ==
                  doctest::Approx(pair.pos2[3 * i + c]).epsilon(1e-6));
    CHECK(data::scene_diameter(pair) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("synth: determinism and occlusion bookkeeping") {
    SynthConfig sc;
    sc.object_count = 2;
    sc.points_per_object = 100;
    sc.rotation_max = 0.2;
    sc.translation_max = 0.05;
    sc.noise_sigma = 0.01;
    sc.occlusion_fraction = 0.25;
    sc.seed = 7;
    auto a = data::synth_rigid_scene(sc);
    auto b = data::synth_rigid_scene(sc);
    CHECK(a.pos1 == b.pos1);
    CHECK(a.pos2 == b.pos2);
    CHECK(a.flow == b.flow);
    CHECK(a.mask == b.mask);

    const int dropped = static_cast<int>(0.25 * 200);
    CHECK(a.m() == 200 - dropped);
    REQUIRE(a.has_mask());
    int invalid = 0;
    for (auto v : a.mask) invalid += v == 0;
    CHECK(invalid == dropped);
}

TEST_CASE("resample: determinism, index oracle, permutation case") {
    Rng rng(8);
    auto pair = random_pair(rng, 40, 30, true, false);

    auto a = data::resample_to(pair, 20, 99);
    auto b = data::resample_to(pair, 20, 99);
    CHECK(a.pos1 == b.pos1);
    CHECK(a.pos2 == b.pos2);

    auto idx = data::resample_indices(40, 30, 20, 99);
    for (int i = 0; i < 20; ++i)
        for (int c = 0; c < 3; ++c) {
            CHECK(a.pos1[3 * i + c] == pair.pos1[3 * idx.source[i] + c]);
            CHECK(a.flow[3 * i + c] == pair.flow[3 * idx.source[i] + c]);
        }
    for (int i = 0; i < 20; ++i) CHECK(a.mask[i] == pair.mask[idx.source[i]]);

    // full-size resample is a permutation
    auto full = data::resample_to(pair, 30, 3);
    auto fidx = data::resample_indices(40, 30, 30, 3);
    std::vector<int> sorted = fidx.target;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 30; ++i) CHECK(sorted[i] == i);

    CHECK_THROWS_AS(data::resample_to(pair, 35, 1), InvalidArgument);
    auto over = data::resample_to(pair, 64, 1, /*with_replacement=*/true);
    CHECK(over.n() == 64);
}

TEST_CASE("downsample_gt follows composed sample indices") {
    Rng rng(9);
    Config cfg;
    cfg.model.levels = 3;
    cfg.model.level_sizes = {32, 12, 5};
    cfg.model.feature_widths = {8, 8, 8};

    std::vector<double> pts(32 * 3);
    for (auto& v : pts) v = rng.uniform(-1, 1);
    Tensor pos = Tensor::from(pts, 32, 3);

    nn::ParamStore ps;
    Rng prng(1);
    model::Backbone backbone(ps, cfg.model, prng);
    auto pyr = backbone(pos);

    std::vector<double> gt(32 * 3);
    for (auto& v : gt) v = rng.uniform(-1, 1);
    Tensor gt_t = Tensor::from(gt, 32, 3);

    auto levels = data::downsample_gt(gt_t, pyr);
    REQUIRE(levels.size() == 3);
    for (std::size_t i = 0; i < gt.size(); ++i) CHECK(levels[0].data()[i] == gt[i]);

    // naive index chase
    for (int l = 1; l < 3; ++l) {
        const auto& cur = pyr.levels[l].sample_indices;
        for (std::size_t r = 0; r < cur.size(); ++r) {
            int orig = cur[r];
            if (l == 2) orig = pyr.levels[1].sample_indices[orig];
            for (int c = 0; c < 3; ++c)
                CHECK(levels[l].at(static_cast<int>(r), c) == gt[3 * orig + c]);
        }
    }

    // constant GT stays constant at all levels
    Tensor const_gt = Tensor::full(32, 3, 0.25);
    auto clevels = data::downsample_gt(const_gt, pyr);
    for (const auto& lv : clevels)
        for (double v : lv.data()) CHECK(v == 0.25);

    // mask downsampling tracks the same indices
    std::vector<std::uint8_t> mask(32, 1);
    mask[pyr.levels[1].sample_indices[0]] = 0;
    auto valid = data::downsample_valid_indices(mask, pyr);
    CHECK(std::find(valid[1].begin(), valid[1].end(), 0) == valid[1].end());
}

TEST_CASE("config: round trip, unknown keys, fingerprint") {
    Config cfg;
    cfg.model.str_k = 12;
    cfg.loss.th = 0.9;
    auto text = cfg.to_text();
    auto parsed = Config::from_text(text);
    CHECK(parsed.model.str_k == 12);
    CHECK(parsed.loss.th == 0.9);
    CHECK(parsed.fingerprint() == cfg.fingerprint());

    Config other;
    CHECK(other.fingerprint() != cfg.fingerprint());

    CHECK_THROWS_WITH_AS(Config::from_text("[model]\nnot_a_key = 3\n"), doctest::Contains("not_a_key"),
                         DataError);
    CHECK_THROWS_AS(Config::from_text("[model]\nlevels = 1\n"), DataError);

    auto paper = Config::paper_profile();
    CHECK(paper.model.level_sizes == std::vector<int>{8192, 2048, 512, 256, 64});
    CHECK(paper.model.d_a == 128);
    CHECK(paper.model.heads == 8);
}

TEST_CASE("synth scenes satisfy the zero-distance correspondence invariant") {
    SynthConfig sc;
    sc.object_count = 2;
    sc.points_per_object = 80;
    sc.rotation_max = 0.25;
    sc.translation_max = 0.08;
    sc.seed = 11;
    auto pair = data::synth_rigid_scene(sc);

    Tensor warped = add(pair.pos1_tensor(), pair.flow_tensor());
    auto nn = geom::knn(warped, pair.pos2_tensor(), 1);
    for (int i = 0; i < pair.n(); ++i) {
        const int j = nn.indices[i];
        double d2 = 0;
        for (int c = 0; c < 3; ++c) {
            const double d = warped.at(i, c) - pair.pos2[3 * j + c];
            d2 += d * d;
        }
        CHECK(std::sqrt(d2) < 1e-6);
    }
}
