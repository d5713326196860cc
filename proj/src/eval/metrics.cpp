#include "sceneflow/eval/metrics.hpp"

#include <cmath>

#include "sceneflow/core/error.hpp"

namespace sf::metrics {

void Accumulator::merge(const Accumulator& o) {
    sum_epe3d += o.sum_epe3d;
    n += o.n;
    n_as += o.n_as;
    n_ar += o.n_ar;
    n_out += o.n_out;
    sum_epe2d += o.sum_epe2d;
    n2d += o.n2d;
    n_acc2d += o.n_acc2d;
    any_2d = any_2d || o.any_2d;
}

MetricReport Accumulator::report() const {
    MetricReport r;
    r.count = n;
    if (n > 0) {
        r.epe3d = sum_epe3d / static_cast<double>(n);
        r.as3d = static_cast<double>(n_as) / static_cast<double>(n);
        r.ar3d = static_cast<double>(n_ar) / static_cast<double>(n);
        r.out3d = static_cast<double>(n_out) / static_cast<double>(n);
    }
    r.has_2d = any_2d;
    r.count2d = n2d;
    if (n2d > 0) {
        r.epe2d = sum_epe2d / static_cast<double>(n2d);
        r.acc2d = static_cast<double>(n_acc2d) / static_cast<double>(n2d);
    }
    return r;
}

std::vector<Pixel> project_pinhole(const std::vector<float>& points_3d,
                                   const std::vector<float>& intrinsics) {
    if (intrinsics.size() != 9) throw InvalidArgument("project_pinhole: intrinsics must be 3 x 3");
    const double fx = intrinsics[0], cx = intrinsics[2];
    const double fy = intrinsics[4], cy = intrinsics[5];
    std::vector<Pixel> out(points_3d.size() / 3);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = points_3d[3 * i], y = points_3d[3 * i + 1], z = points_3d[3 * i + 2];
        if (z > 0.0) {
            out[i].u = fx * x / z + cx;
            out[i].v = fy * y / z + cy;
            out[i].valid = true;
        }
    }
    return out;
}

Accumulator accumulate_metrics(const std::vector<float>& positions, const std::vector<float>& pred_flow,
                               const std::vector<float>& gt_flow, const std::vector<std::uint8_t>* mask,
                               const std::vector<float>* intrinsics, bool require_2d) {
    if (pred_flow.size() != gt_flow.size() || positions.size() != gt_flow.size())
        throw InvalidArgument("metrics: positions, predicted and ground-truth flow sizes differ");
    const auto n = static_cast<long long>(gt_flow.size() / 3);
    if (mask && static_cast<long long>(mask->size()) != n)
        throw InvalidArgument("metrics: mask length mismatch");
    const bool with_2d = intrinsics != nullptr;
    if (require_2d && !with_2d)
        throw InvalidArgument("metrics: 2D metrics requested but no camera intrinsics are available");

    std::vector<Pixel> px_pred, px_gt, px_src;
    if (with_2d) {
        std::vector<float> warped_pred(positions.size()), warped_gt(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i) {
            warped_pred[i] = positions[i] + pred_flow[i];
            warped_gt[i] = positions[i] + gt_flow[i];
        }
        px_pred = project_pinhole(warped_pred, *intrinsics);
        px_gt = project_pinhole(warped_gt, *intrinsics);
        px_src = project_pinhole(positions, *intrinsics);
    }

    Accumulator acc;
    acc.any_2d = with_2d;
    for (long long i = 0; i < n; ++i) {
        if (mask && !(*mask)[static_cast<std::size_t>(i)]) continue;
        double epe2 = 0.0, gt2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred_flow[3 * i + c] - gt_flow[3 * i + c];
            const double g = gt_flow[3 * i + c];
            epe2 += d * d;
            gt2 += g * g;
        }
        const double epe = std::sqrt(epe2);
        const double rel = epe / std::max(std::sqrt(gt2), kRelEps);
        acc.sum_epe3d += epe;
        acc.n += 1;
        if (epe < kAccStrictEpe || rel < kAccStrictRel) acc.n_as += 1;
        if (epe < kAccRelaxEpe || rel < kAccRelaxRel) acc.n_ar += 1;
        if (epe > kOutlierEpe || rel > kOutlierRel) acc.n_out += 1;

        if (with_2d && px_pred[i].valid && px_gt[i].valid && px_src[i].valid) {
            const double du = px_pred[i].u - px_gt[i].u;
            const double dv = px_pred[i].v - px_gt[i].v;
            const double epe2d = std::sqrt(du * du + dv * dv);
            const double gu = px_gt[i].u - px_src[i].u;
            const double gv = px_gt[i].v - px_src[i].v;
            const double rel2d = epe2d / std::max(std::sqrt(gu * gu + gv * gv), kRelEps);
            acc.sum_epe2d += epe2d;
            acc.n2d += 1;
            if (epe2d < kAcc2dPx || rel2d < kAcc2dRel) acc.n_acc2d += 1;
        }
    }
    return acc;
}

MetricReport compute_metrics(const std::vector<float>& positions, const std::vector<float>& pred_flow,
                             const std::vector<float>& gt_flow, const std::vector<std::uint8_t>* mask,
                             const std::vector<float>* intrinsics, bool require_2d) {
    return accumulate_metrics(positions, pred_flow, gt_flow, mask, intrinsics, require_2d).report();
}

}  // namespace sf::metrics
