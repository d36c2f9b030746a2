#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "floorloc/camera.hpp"
#include "floorloc/errors.hpp"

namespace floorloc {

/// Floor applied to every Laplace scale on ingestion; the observation model
/// diverges as b -> 0.
inline constexpr double kMinScale = 0.01;  // m

/// Per-column depth and Laplace scale, one entry per image column (or per
/// column of a downsampled prediction; column u covers source column
/// u * width / D). Scales are floored at kMinScale by the constructor.
struct ColumnPrediction {
    std::vector<double> depths;
    std::vector<double> scales;
    CameraModel camera;

    ColumnPrediction() = default;
    ColumnPrediction(std::vector<double> d, std::vector<double> b, const CameraModel& cam)
        : depths(std::move(d)), scales(std::move(b)), camera(cam) {
        if (depths.size() != scales.size())
            throw LengthMismatch("depths has " + std::to_string(depths.size()) +
                                 " entries, scales has " + std::to_string(scales.size()));
        if (depths.empty()) throw LengthMismatch("prediction must have at least one column");
        for (double& s : scales) s = std::max(s, kMinScale);
    }

    int columns() const { return static_cast<int>(depths.size()); }

    /// Bearing of prediction column u. Equal to column_angle when the
    /// prediction is full-width; otherwise the intrinsics are scaled to the
    /// downsampled width.
    double bearing(int u) const {
        const double scale = static_cast<double>(columns()) / camera.width;
        return std::atan((u + 0.5 - cam_cx() * scale) / (camera.fx * scale));
    }

  private:
    double cam_cx() const { return camera.cx; }
};

/// Equiangular-ray observation o_t: per-ray depth and Laplace scale relative
/// to the (unknown) pose heading. Invalid rays carry no depth/scale meaning.
struct DepthObservation {
    std::vector<double> ray_angles;  // ascending, radians relative to heading
    std::vector<double> depths;
    std::vector<double> scales;
    std::vector<std::uint8_t> valid;

    int size() const { return static_cast<int>(ray_angles.size()); }
    int valid_count() const {
        int n = 0;
        for (auto v : valid) n += v;
        return n;
    }
};

/// Resample per-column predictions onto n equiangular rays by linear
/// interpolation over column bearing. Rays outside the covered bearing range
/// are marked invalid.
inline DepthObservation resample_to_rays(const ColumnPrediction& pred, int n_rays) {
    if (n_rays < 1) throw ConfigError("n_rays", "must be at least 1");

    DepthObservation obs;
    obs.ray_angles = equiangular_rays(pred.camera.hfov(), n_rays);
    obs.depths.assign(n_rays, 0.0);
    obs.scales.assign(n_rays, kMinScale);
    obs.valid.assign(n_rays, 0);

    const int d = pred.columns();
    std::vector<double> bearings(d);
    for (int u = 0; u < d; ++u) bearings[u] = pred.bearing(u);

    for (int j = 0; j < n_rays; ++j) {
        const double a = obs.ray_angles[j];
        if (a < bearings.front() || a > bearings.back()) continue;  // outside coverage
        obs.valid[j] = 1;
        if (d == 1) {
            obs.depths[j] = pred.depths[0];
            obs.scales[j] = pred.scales[0];
            continue;
        }
        const auto it = std::upper_bound(bearings.begin(), bearings.end(), a);
        const int hi = std::clamp(static_cast<int>(it - bearings.begin()), 1, d - 1);
        const int lo = hi - 1;
        const double w = (a - bearings[lo]) / (bearings[hi] - bearings[lo]);
        obs.depths[j] = pred.depths[lo] + w * (pred.depths[hi] - pred.depths[lo]);
        obs.scales[j] = pred.scales[lo] + w * (pred.scales[hi] - pred.scales[lo]);
    }
    return obs;
}

/// Laplace negative log-likelihood of predictions against reference depths:
/// sum of log(b_i) + |d_i - ref_i| / b_i. Lower is better calibrated.
inline double laplace_nll(const ColumnPrediction& pred, const std::vector<double>& gt_depths) {
    if (gt_depths.size() != pred.depths.size())
        throw LengthMismatch("gt has " + std::to_string(gt_depths.size()) + " entries, prediction has " +
                             std::to_string(pred.depths.size()));
    double nll = 0.0;
    for (std::size_t i = 0; i < gt_depths.size(); ++i)
        nll += std::log(pred.scales[i]) + std::abs(pred.depths[i] - gt_depths[i]) / pred.scales[i];
    return nll;
}

/// Same score over (depth, scale, reference) triples with a validity mask;
/// used when reference depths contain misses.
inline double laplace_nll_masked(const std::vector<double>& depths,
                                 const std::vector<double>& scales,
                                 const std::vector<double>& ref,
                                 const std::vector<std::uint8_t>& use) {
    if (depths.size() != scales.size() || depths.size() != ref.size() || depths.size() != use.size())
        throw LengthMismatch("laplace_nll_masked inputs");
    double nll = 0.0;
    for (std::size_t i = 0; i < depths.size(); ++i)
        if (use[i]) nll += std::log(scales[i]) + std::abs(depths[i] - ref[i]) / scales[i];
    return nll;
}

}  // namespace floorloc
