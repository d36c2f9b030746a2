#pragma once

#include <cmath>

#include "floorloc/errors.hpp"
#include "floorloc/grid.hpp"

namespace floorloc {

/// Pinhole intrinsics. Axes follow the usual camera convention: x right,
/// y down, z forward; pixel (u, v) has its center at (u + 0.5, v + 0.5).
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    CameraModel() = default;
    CameraModel(double fx_, double fy_, double cx_, double cy_, int w, int h)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
        validate();
    }

    /// Build from a horizontal field of view; principal point at the image center.
    static CameraModel from_hfov(double hfov_rad, int w, int h) {
        if (!(hfov_rad > 0.0 && hfov_rad < kPi))
            throw ConfigError("camera.fov", "horizontal FoV must lie in (0, pi)");
        const double f = w / (2.0 * std::tan(hfov_rad / 2.0));
        return CameraModel(f, f, w / 2.0, h / 2.0, w, h);
    }

    void validate() const {
        if (width < 1 || height < 1)
            throw ConfigError("camera.size", "image must be at least 1x1");
        if (!(fx > 0.0) || !(fy > 0.0))
            throw ConfigError("camera.focal", "focal lengths must be positive");
    }

    double hfov() const { return 2.0 * std::atan(width / (2.0 * fx)); }
};

/// Bearing of image column u: angle between the optical axis and the ray
/// through the column center. Strictly increasing in u.
inline double column_angle(const CameraModel& cam, int u) {
    return std::atan((u + 0.5 - cam.cx) / cam.fx);
}

/// Equiangular ray offsets across the horizontal FoV: n angles with spacing
/// fov/n, inset half a spacing from each edge. Ascending.
inline std::vector<double> equiangular_rays(double hfov, int n_rays) {
    std::vector<double> a(n_rays);
    const double spacing = hfov / n_rays;
    for (int j = 0; j < n_rays; ++j) a[j] = -hfov / 2.0 + (j + 0.5) * spacing;
    return a;
}

}  // namespace floorloc
