#pragma once

#include <cstdint>
#include <vector>

namespace sf::metrics {

// Accuracy/outlier thresholds: absolute EPE (m) or relative error.
inline constexpr double kAccStrictEpe = 0.05;
inline constexpr double kAccStrictRel = 0.05;
inline constexpr double kAccRelaxEpe = 0.1;
inline constexpr double kAccRelaxRel = 0.1;
inline constexpr double kOutlierEpe = 0.3;
inline constexpr double kOutlierRel = 0.3;
inline constexpr double kAcc2dPx = 3.0;
inline constexpr double kAcc2dRel = 0.05;
inline constexpr double kRelEps = 1e-8;

struct MetricReport {
    double epe3d = 0.0;
    double as3d = 0.0;
    double ar3d = 0.0;
    double out3d = 0.0;
    double epe2d = 0.0;
    double acc2d = 0.0;
    long long count = 0;    // evaluated 3D points
    long long count2d = 0;  // points with a valid projection
    bool has_2d = false;
};

// Point-pooled accumulation across scenes.
struct Accumulator {
    double sum_epe3d = 0.0;
    long long n = 0, n_as = 0, n_ar = 0, n_out = 0;
    double sum_epe2d = 0.0;
    long long n2d = 0, n_acc2d = 0;
    bool any_2d = false;

    void merge(const Accumulator& o);
    MetricReport report() const;
};

struct Pixel {
    double u = 0.0, v = 0.0;
    bool valid = false;  // depth > 0
};

// u = fx x/z + cx, v = fy y/z + cy; non-positive depth marks the point invalid.
std::vector<Pixel> project_pinhole(const std::vector<float>& points_3d,
                                   const std::vector<float>& intrinsics);

// EPE3D / AS3D / AR3D / Out3D over unmasked points, plus EPE2D / Acc2D when
// intrinsics are given. `require_2d` turns missing intrinsics into an error.
Accumulator accumulate_metrics(const std::vector<float>& positions, const std::vector<float>& pred_flow,
                               const std::vector<float>& gt_flow,
                               const std::vector<std::uint8_t>* mask = nullptr,
                               const std::vector<float>* intrinsics = nullptr, bool require_2d = false);

MetricReport compute_metrics(const std::vector<float>& positions, const std::vector<float>& pred_flow,
                             const std::vector<float>& gt_flow,
                             const std::vector<std::uint8_t>* mask = nullptr,
                             const std::vector<float>* intrinsics = nullptr, bool require_2d = false);

}  // namespace sf::metrics
