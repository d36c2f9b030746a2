#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "floorloc/grid.hpp"

namespace floorloc {

inline constexpr double kDefaultMaxRange = 50.0;  // m; exceeds any room-scale depth

struct RayHit {
    bool hit = false;
    double range = 0.0;  // meters from origin to the first occupied-cell crossing

    static RayHit miss() { return {false, 0.0}; }
    static RayHit at(double r) { return {true, r}; }
};

namespace detail {

// Start cell for one axis with the tie-break toward motion: a point exactly on
// a grid line belongs to the cell in the direction of travel.
inline int start_cell(double pos_cells, double dir) {
    int c = static_cast<int>(std::floor(pos_cells));
    if (pos_cells == static_cast<double>(c) && dir < 0.0) c -= 1;
    return c;
}

}  // namespace detail

/// Exact grid-line traversal (Amanatides-Woo DDA). Returns the distance from
/// (ox, oy) to the first crossing into an Occupied cell along world angle
/// `angle`, or a miss if the ray leaves the grid or exceeds max_range first.
inline RayHit cast_ray(const OccupancyGrid& grid, double ox, double oy, double angle,
                       double max_range = kDefaultMaxRange) {
    const double res = grid.resolution;
    const double px = (ox - grid.origin_x) / res;
    const double py = (oy - grid.origin_y) / res;
    if (px < 0.0 || px > grid.width || py < 0.0 || py > grid.height)
        throw OriginOutside("origin (" + std::to_string(ox) + ", " + std::to_string(oy) + ")");

    const double dx = std::cos(angle);
    const double dy = std::sin(angle);

    int i = detail::start_cell(px, dx);
    int j = detail::start_cell(py, dy);
    if (!grid.in_bounds(i, j))
        throw OriginOutside("origin (" + std::to_string(ox) + ", " + std::to_string(oy) + ")");
    if (grid.occupied(i, j))
        throw OriginOccupied("origin (" + std::to_string(ox) + ", " + std::to_string(oy) + ")");

    const int step_i = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
    const int step_j = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);

    constexpr double inf = std::numeric_limits<double>::infinity();
    // Parametric distance (in meters) to the next vertical / horizontal grid line.
    double t_max_x = inf, t_delta_x = inf;
    if (step_i != 0) {
        const double next = step_i > 0 ? (i + 1.0 - px) : (px - i);
        t_max_x = next * res / std::abs(dx);
        t_delta_x = res / std::abs(dx);
    }
    double t_max_y = inf, t_delta_y = inf;
    if (step_j != 0) {
        const double next = step_j > 0 ? (j + 1.0 - py) : (py - j);
        t_max_y = next * res / std::abs(dy);
        t_delta_y = res / std::abs(dy);
    }

    while (true) {
        double t;
        if (t_max_x <= t_max_y) {
            t = t_max_x;
            t_max_x += t_delta_x;
            i += step_i;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            j += step_j;
        }
        if (t > max_range) return RayHit::miss();
        if (!grid.in_bounds(i, j)) return RayHit::miss();
        if (grid.occupied(i, j)) return RayHit::at(t);
    }
}

/// Floorplan depth for a fan of rays relative to the pose heading: element j is
/// the cast range at world angle phi + ray_angles[j], projected onto the
/// optical axis (times cos of the ray offset). Rays that never hit are empty.
inline std::vector<std::optional<double>> floorplan_depth(
    const OccupancyGrid& grid, const Pose2& pose, const std::vector<double>& ray_angles,
    double max_range = kDefaultMaxRange) {
    std::vector<std::optional<double>> out(ray_angles.size());
    for (std::size_t j = 0; j < ray_angles.size(); ++j) {
        const RayHit h = cast_ray(grid, pose.x, pose.y, pose.phi + ray_angles[j], max_range);
        if (h.hit) out[j] = h.range * std::cos(ray_angles[j]);
    }
    return out;
}

}  // namespace floorloc
