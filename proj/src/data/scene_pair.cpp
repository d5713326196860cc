#include "sceneflow/data/scene_pair.hpp"

#include <cmath>

#include "sceneflow/core/error.hpp"
#include "sceneflow/core/rng.hpp"

namespace sf::data {

namespace {

Tensor to_tensor(const std::vector<float>& v, int cols) {
    std::vector<double> d(v.begin(), v.end());
    return Tensor::from(std::move(d), static_cast<int>(v.size()) / cols, cols);
}

void require_shape(const NamedArray& a, std::size_t ndim, const char* what) {
    if (a.shape.size() != ndim)
        throw DataError("scene pair: array '" + a.name + "' (" + what + ") has rank " +
                        std::to_string(a.shape.size()) + ", expected " + std::to_string(ndim));
}

}  // namespace

void ScenePair::validate() const {
    if (pos1.empty() || pos1.size() % 3 != 0) throw DataError("scene pair: 'pos1' must be a non-empty N x 3 array");
    if (pos2.empty() || pos2.size() % 3 != 0) throw DataError("scene pair: 'pos2' must be a non-empty M x 3 array");
    if (flow.size() != pos1.size()) throw DataError("scene pair: 'flow' must match 'pos1' shape");
    if (!mask.empty() && mask.size() != static_cast<std::size_t>(n()))
        throw DataError("scene pair: 'mask' length must equal the source point count");
    if (!intrinsics.empty() && intrinsics.size() != 9)
        throw DataError("scene pair: 'intrinsics' must be a 3 x 3 matrix");
    auto check_finite = [](const std::vector<float>& v, const char* name) {
        for (float x : v)
            if (!std::isfinite(x)) throw DataError(std::string("scene pair: non-finite value in '") + name + "'");
    };
    check_finite(pos1, "pos1");
    check_finite(pos2, "pos2");
    check_finite(flow, "flow");
}

Tensor ScenePair::pos1_tensor() const { return to_tensor(pos1, 3); }
Tensor ScenePair::pos2_tensor() const { return to_tensor(pos2, 3); }
Tensor ScenePair::flow_tensor() const { return to_tensor(flow, 3); }

ScenePair load_scene_pair(const std::string& path) {
    auto arrays = read_archive(path);
    ScenePair p;
    bool saw_pos1 = false, saw_pos2 = false, saw_flow = false;
    for (auto& a : arrays) {
        if (a.name == "pos1") {
            require_shape(a, 2, "source positions");
            p.pos1 = a.as_f32();
            saw_pos1 = true;
        } else if (a.name == "pos2") {
            require_shape(a, 2, "target positions");
            p.pos2 = a.as_f32();
            saw_pos2 = true;
        } else if (a.name == "flow") {
            require_shape(a, 2, "ground-truth flow");
            p.flow = a.as_f32();
            saw_flow = true;
        } else if (a.name == "mask") {
            require_shape(a, 1, "occlusion mask");
            p.mask = a.as_u8();
        } else if (a.name == "intrinsics") {
            require_shape(a, 2, "camera intrinsics");
            p.intrinsics = a.as_f32();
        } else {
            p.extras.push_back(std::move(a));
        }
    }
    if (!saw_pos1) throw DataError("scene pair: missing required array 'pos1' in " + path);
    if (!saw_pos2) throw DataError("scene pair: missing required array 'pos2' in " + path);
    if (!saw_flow) throw DataError("scene pair: missing required array 'flow' in " + path);
    p.validate();
    return p;
}

void save_scene_pair(const ScenePair& pair, const std::string& path) {
    pair.validate();
    std::vector<NamedArray> arrays;
    arrays.push_back(NamedArray::from_f32("pos1", pair.pos1, {static_cast<std::uint64_t>(pair.n()), 3}));
    arrays.push_back(NamedArray::from_f32("pos2", pair.pos2, {static_cast<std::uint64_t>(pair.m()), 3}));
    arrays.push_back(NamedArray::from_f32("flow", pair.flow, {static_cast<std::uint64_t>(pair.n()), 3}));
    if (pair.has_mask())
        arrays.push_back(NamedArray::from_u8("mask", pair.mask, {static_cast<std::uint64_t>(pair.n())}));
    if (pair.has_intrinsics())
        arrays.push_back(NamedArray::from_f32("intrinsics", pair.intrinsics, {3, 3}));
    for (const auto& e : pair.extras) arrays.push_back(e);
    write_archive(path, arrays);
}

ResampleIndices resample_indices(int n, int m, int n_points, std::uint64_t seed, bool with_replacement) {
    if (n_points < 1) throw InvalidArgument("resample: n_points must be positive");
    if (!with_replacement && (n_points > n || n_points > m))
        throw InvalidArgument("resample: n_points exceeds frame size and with_replacement is off");
    Rng rng(seed);
    auto draw = [&](int count, int total) {
        std::vector<int> idx;
        idx.reserve(count);
        if (count <= total) {
            // partial Fisher-Yates over [0, total)
            std::vector<int> pool(total);
            for (int i = 0; i < total; ++i) pool[i] = i;
            for (int i = 0; i < count; ++i) {
                const int j = i + rng.uniform_int(total - i);
                std::swap(pool[i], pool[j]);
                idx.push_back(pool[i]);
            }
        } else {
            for (int i = 0; i < count; ++i) idx.push_back(rng.uniform_int(total));
        }
        return idx;
    };
    ResampleIndices out;
    out.source = draw(n_points, n);
    out.target = draw(n_points, m);
    return out;
}

ScenePair resample_to(const ScenePair& pair, int n_points, std::uint64_t seed, bool with_replacement) {
    auto idx = resample_indices(pair.n(), pair.m(), n_points, seed, with_replacement);
    ScenePair out;
    out.pos1.reserve(static_cast<std::size_t>(n_points) * 3);
    out.flow.reserve(static_cast<std::size_t>(n_points) * 3);
    for (int i : idx.source) {
        for (int c = 0; c < 3; ++c) out.pos1.push_back(pair.pos1[3 * static_cast<std::size_t>(i) + c]);
        for (int c = 0; c < 3; ++c) out.flow.push_back(pair.flow[3 * static_cast<std::size_t>(i) + c]);
    }
    if (pair.has_mask())
        for (int i : idx.source) out.mask.push_back(pair.mask[static_cast<std::size_t>(i)]);
    out.pos2.reserve(static_cast<std::size_t>(n_points) * 3);
    for (int i : idx.target)
        for (int c = 0; c < 3; ++c) out.pos2.push_back(pair.pos2[3 * static_cast<std::size_t>(i) + c]);
    out.intrinsics = pair.intrinsics;
    out.extras = pair.extras;
    return out;
}

}  // namespace sf::data
