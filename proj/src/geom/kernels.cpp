#include "sceneflow/geom/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "sceneflow/core/error.hpp"

namespace sf::geom {

namespace {

inline double dist2(const double* a, const double* b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

void check_points(const Tensor& t, const char* what) {
    if (!t.defined() || t.cols() != 3 || t.rows() < 1)
        throw InvalidArgument(std::string(what) + ": expected a non-empty [n x 3] tensor");
}

}  // namespace

std::vector<int> NeighborSet::query_of_entry() const {
    std::vector<int> q(indices.size());
    for (int g = 0; g < query_count; ++g)
        for (int r = offsets[g]; r < offsets[g + 1]; ++r) q[r] = g;
    return q;
}

void NeighborSet::validate(int reference_size) const {
    if (static_cast<int>(offsets.size()) != query_count + 1 || offsets.front() != 0 ||
        offsets.back() != static_cast<int>(indices.size()))
        throw InvalidArgument("NeighborSet: inconsistent offsets");
    for (int q = 0; q < query_count; ++q) {
        if (group_size(q) > k_max) throw InvalidArgument("NeighborSet: group larger than k_max");
        if (group_size(q) == 0 && !has_radius)
            throw InvalidArgument("NeighborSet: empty group without radius truncation");
    }
    for (int i : indices)
        if (i < 0 || i >= reference_size) throw InvalidArgument("NeighborSet: index out of range");
}

std::vector<int> fps(const Tensor& points, int m, int seed_index) {
    check_points(points, "fps");
    const int n = points.rows();
    if (m < 1 || m > n) throw InvalidArgument("fps: m must be in [1, n]");
    if (seed_index < 0 || seed_index >= n) throw InvalidArgument("fps: seed_index out of range");

    const double* p = points.data().data();
    std::vector<int> picked;
    picked.reserve(m);
    picked.push_back(seed_index);

    std::vector<double> min_d2(n);
    for (int i = 0; i < n; ++i) min_d2[i] = dist2(p + 3 * static_cast<std::size_t>(i), p + 3 * static_cast<std::size_t>(seed_index));

    for (int step = 1; step < m; ++step) {
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            if (min_d2[i] > best_d2) {  // strict > keeps the smallest index on ties
                best_d2 = min_d2[i];
                best = i;
            }
        }
        picked.push_back(best);
        const double* q = p + 3 * static_cast<std::size_t>(best);
        for (int i = 0; i < n; ++i) min_d2[i] = std::min(min_d2[i], dist2(p + 3 * static_cast<std::size_t>(i), q));
    }
    return picked;
}

NeighborSet knn(const Tensor& query, const Tensor& reference, int k) {
    check_points(query, "knn query");
    check_points(reference, "knn reference");
    const int nq = query.rows(), nr = reference.rows();
    if (k < 1 || k > nr) throw InvalidArgument("knn: k must be in [1, reference size]");

    NeighborSet out;
    out.query_count = nq;
    out.k_max = k;
    out.indices.resize(static_cast<std::size_t>(nq) * k);
    out.offsets.resize(nq + 1);
    for (int q = 0; q <= nq; ++q) out.offsets[q] = q * k;

    const double* qp = query.data().data();
    const double* rp = reference.data().data();
    std::vector<double> d2buf(nr);
    std::vector<double> best_d(k);
    std::vector<int> best_i(k);
    for (int q = 0; q < nq; ++q) {
        const double qx = qp[3 * static_cast<std::size_t>(q)];
        const double qy = qp[3 * static_cast<std::size_t>(q) + 1];
        const double qz = qp[3 * static_cast<std::size_t>(q) + 2];
        for (int r = 0; r < nr; ++r) {
            const double dx = rp[3 * static_cast<std::size_t>(r)] - qx;
            const double dy = rp[3 * static_cast<std::size_t>(r) + 1] - qy;
            const double dz = rp[3 * static_cast<std::size_t>(r) + 2] - qz;
            d2buf[r] = dx * dx + dy * dy + dz * dz;
        }
        // bounded insertion keeps the k smallest by (distance, index); scanning
        // in index order means equal distances settle on the smaller index
        int filled = 0;
        for (int r = 0; r < nr; ++r) {
            const double d = d2buf[r];
            if (filled == k && d >= best_d[k - 1]) continue;
            int pos = filled < k ? filled : k - 1;
            while (pos > 0 && best_d[pos - 1] > d) {
                best_d[pos] = best_d[pos - 1];
                best_i[pos] = best_i[pos - 1];
                --pos;
            }
            best_d[pos] = d;
            best_i[pos] = r;
            if (filled < k) ++filled;
        }
        for (int j = 0; j < k; ++j) out.indices[static_cast<std::size_t>(q) * k + j] = best_i[j];
    }
    return out;
}

NeighborSet knn_radius(const Tensor& query, const Tensor& reference, int k, double r) {
    if (!(r > 0.0)) throw InvalidArgument("knn_radius: r must be positive");
    NeighborSet base = knn(query, reference, k);
    if (std::isinf(r)) return base;  // radius disabled

    NeighborSet out;
    out.query_count = base.query_count;
    out.k_max = k;
    out.radius = r;
    out.has_radius = true;
    out.offsets.resize(base.query_count + 1, 0);

    const double r2 = r * r;
    const double* qp = query.data().data();
    const double* rp = reference.data().data();
    for (int q = 0; q < base.query_count; ++q) {
        for (int j = base.offsets[q]; j < base.offsets[q + 1]; ++j) {
            const int idx = base.indices[j];
            if (dist2(rp + 3 * static_cast<std::size_t>(idx), qp + 3 * static_cast<std::size_t>(q)) < r2)
                out.indices.push_back(idx);
        }
        out.offsets[q + 1] = static_cast<int>(out.indices.size());
    }
    return out;
}

Tensor group_relative(const Tensor& reference_pos, const Tensor& reference_features,
                      const NeighborSet& neighbors, const Tensor& query_pos) {
    check_points(reference_pos, "group_relative reference");
    check_points(query_pos, "group_relative query");
    if (reference_features.rows() != reference_pos.rows())
        throw InvalidArgument("group_relative: feature row count must equal reference size");
    if (neighbors.query_count != query_pos.rows())
        throw InvalidArgument("group_relative: neighbor set does not match query size");
    neighbors.validate(reference_pos.rows());

    Tensor npos = gather_rows(reference_pos, neighbors.indices);
    Tensor qpos = gather_rows(query_pos, neighbors.query_of_entry());
    Tensor rel = sub(npos, qpos);
    Tensor nfeat = gather_rows(reference_features, neighbors.indices);
    return concat_cols({rel, nfeat});
}

Tensor idw_upsample(const Tensor& coarse_pos, const Tensor& coarse_values, const Tensor& fine_pos,
                    int k, double eps) {
    check_points(coarse_pos, "idw_upsample coarse");
    check_points(fine_pos, "idw_upsample fine");
    if (coarse_values.rows() != coarse_pos.rows())
        throw InvalidArgument("idw_upsample: value rows must equal coarse size");
    if (!(eps > 0.0)) throw InvalidArgument("idw_upsample: eps must be positive");
    const int kc = std::min(k, coarse_pos.rows());

    NeighborSet nn = knn(fine_pos, coarse_pos, kc);
    const double* cp = coarse_pos.data().data();
    const double* fp = fine_pos.data().data();

    std::vector<double> w(nn.indices.size());
    for (int q = 0; q < nn.query_count; ++q) {
        double z = 0.0;
        for (int j = nn.offsets[q]; j < nn.offsets[q + 1]; ++j) {
            const double d = std::sqrt(dist2(cp + 3 * static_cast<std::size_t>(nn.indices[j]),
                                             fp + 3 * static_cast<std::size_t>(q)));
            w[j] = 1.0 / (d + eps);
            z += w[j];
        }
        for (int j = nn.offsets[q]; j < nn.offsets[q + 1]; ++j) w[j] /= z;
    }

    Tensor vals = gather_rows(coarse_values, nn.indices);
    Tensor weights = Tensor::from(std::move(w), static_cast<int>(nn.indices.size()), 1);
    return weighted_group_sum(vals, weights, nn.query_count, kc);
}

}  // namespace sf::geom
