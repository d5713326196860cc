#include "sceneflow/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sceneflow/core/error.hpp"
#include "sceneflow/core/rng.hpp"

namespace sf::data {

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;

Vec3 random_unit(Rng& rng) {
    // uniform direction via normalized Gaussian triple
    while (true) {
        Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (n > 1e-9) return {v[0] / n, v[1] / n, v[2] / n};
    }
}

Mat3 axis_angle(const Vec3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    const double x = axis[0], y = axis[1], z = axis[2];
    return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
            t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
            t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

Vec3 rotate_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

// point on a primitive surface, in local coordinates of roughly unit extent
Vec3 sample_primitive(Rng& rng, int kind) {
    switch (kind) {
        case 0: {  // rectangle
            return {rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
        }
        case 1: {  // box surface: pick a face, then a point on it
            const int face = rng.uniform_int(6);
            const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
            const double s = face % 2 == 0 ? 1.0 : -1.0;
            if (face < 2) return {s, u, v};
            if (face < 4) return {u, s, v};
            return {u, v, s};
        }
        default: {  // sphere surface
            return random_unit(rng);
        }
    }
}

}  // namespace

ScenePair synth_rigid_scene(const SynthConfig& config) {
    if (config.object_count < 1) throw InvalidArgument("synth: object_count must be >= 1");
    if (config.points_per_object < 1) throw InvalidArgument("synth: points_per_object must be >= 1");
    if (!(config.occlusion_fraction >= 0.0 && config.occlusion_fraction < 1.0))
        throw InvalidArgument("synth: occlusion_fraction must be in [0, 1)");

    Rng rng(config.seed);
    const int total = config.object_count * config.points_per_object;
    std::vector<double> src(static_cast<std::size_t>(total) * 3);
    std::vector<double> dst(static_cast<std::size_t>(total) * 3);

    for (int obj = 0; obj < config.object_count; ++obj) {
        const int kind = rng.uniform_int(3);
        const Vec3 center{rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35)};
        const double extent = rng.uniform(0.06, 0.18);
        const Mat3 orient = axis_angle(random_unit(rng), rng.uniform(0, 2 * 3.14159265358979323846));

        const Mat3 motion_rot = axis_angle(random_unit(rng), rng.uniform(0.0, config.rotation_max));
        const Vec3 t{rng.uniform(-config.translation_max, config.translation_max),
                     rng.uniform(-config.translation_max, config.translation_max),
                     rng.uniform(-config.translation_max, config.translation_max)};

        for (int i = 0; i < config.points_per_object; ++i) {
            Vec3 local = sample_primitive(rng, kind);
            for (auto& v : local) v *= extent;
            Vec3 p = rotate_vec(orient, local);
            for (int c = 0; c < 3; ++c) p[c] += center[c];

            // rigid motion about the object centroid
            Vec3 rel{p[0] - center[0], p[1] - center[1], p[2] - center[2]};
            Vec3 q = rotate_vec(motion_rot, rel);
            for (int c = 0; c < 3; ++c) q[c] += center[c] + t[c];

            const std::size_t off = 3 * (static_cast<std::size_t>(obj) * config.points_per_object + i);
            for (int c = 0; c < 3; ++c) src[off + c] = p[c];
            for (int c = 0; c < 3; ++c) dst[off + c] = q[c];
        }
    }

    // normalize so the source bounding-box diagonal is exactly 1
    Vec3 lo{src[0], src[1], src[2]}, hi = lo;
    for (int i = 0; i < total; ++i)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], src[3 * static_cast<std::size_t>(i) + c]);
            hi[c] = std::max(hi[c], src[3 * static_cast<std::size_t>(i) + c]);
        }
    const double diag = std::sqrt((hi[0] - lo[0]) * (hi[0] - lo[0]) + (hi[1] - lo[1]) * (hi[1] - lo[1]) +
                                  (hi[2] - lo[2]) * (hi[2] - lo[2]));
    const double scale = diag > 1e-12 ? 1.0 / diag : 1.0;
    for (auto& v : src) v *= scale;
    for (auto& v : dst) v *= scale;

    ScenePair pair;
    pair.pos1.resize(src.size());
    pair.flow.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        pair.pos1[i] = static_cast<float>(src[i]);
        // flow is the rigid displacement; target jitter below is not part of it
        pair.flow[i] = static_cast<float>(dst[i] - src[i]);
    }

    std::vector<double> tgt = dst;
    if (config.noise_sigma > 0.0)
        for (auto& v : tgt) v += rng.normal(0.0, config.noise_sigma * scale);

    // occlusion: drop target points, mark the matching source points invalid
    const int drop = static_cast<int>(config.occlusion_fraction * total);
    std::vector<std::uint8_t> keep(total, 1);
    if (drop > 0) {
        std::vector<int> pool(total);
        for (int i = 0; i < total; ++i) pool[i] = i;
        for (int i = 0; i < drop; ++i) {
            const int j = i + rng.uniform_int(total - i);
            std::swap(pool[i], pool[j]);
            keep[pool[i]] = 0;
        }
        pair.mask = keep;
    }
    for (int i = 0; i < total; ++i) {
        if (!keep[i]) continue;
        for (int c = 0; c < 3; ++c) pair.pos2.push_back(static_cast<float>(tgt[3 * static_cast<std::size_t>(i) + c]));
    }

    pair.validate();
    return pair;
}

double scene_diameter(const ScenePair& pair) {
    if (pair.pos1.empty()) return 0.0;
    float lo[3] = {pair.pos1[0], pair.pos1[1], pair.pos1[2]};
    float hi[3] = {lo[0], lo[1], lo[2]};
    for (int i = 0; i < pair.n(); ++i)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], pair.pos1[3 * static_cast<std::size_t>(i) + c]);
            hi[c] = std::max(hi[c], pair.pos1[3 * static_cast<std::size_t>(i) + c]);
        }
    const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace sf::data
