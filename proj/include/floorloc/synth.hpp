#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "floorloc/camera.hpp"
#include "floorloc/filter.hpp"
#include "floorloc/grid.hpp"
#include "floorloc/raycast.hpp"
#include "floorloc/rng.hpp"

namespace floorloc {

// Stream ids separating RNG uses of one seed.
namespace rng_stream {
inline constexpr std::uint64_t kMapSplit = 1;
inline constexpr std::uint64_t kMapObstacle = 2;
inline constexpr std::uint64_t kTrajStart = 3;
inline constexpr std::uint64_t kTrajStep = 4;
inline constexpr std::uint64_t kTrajMeasure = 5;
inline constexpr std::uint64_t kObsNoise = 6;
inline constexpr std::uint64_t kObsSector = 7;
inline constexpr std::uint64_t kObsCorrupt = 8;
}  // namespace rng_stream

enum class MapStyle { Rooms, Maze, Corridor };

inline MapStyle map_style_from_string(const std::string& s) {
    if (s == "rooms") return MapStyle::Rooms;
    if (s == "maze") return MapStyle::Maze;
    if (s == "corridor") return MapStyle::Corridor;
    throw ConfigError("style", "unknown map style '" + s + "'");
}

inline const char* to_string(MapStyle s) {
    switch (s) {
        case MapStyle::Rooms: return "rooms";
        case MapStyle::Maze: return "maze";
        default: return "corridor";
    }
}

namespace detail {

inline void fill_rect(OccupancyGrid& g, int i0, int i1, int j0, int j1, Cell c) {
    for (int j = std::max(0, j0); j <= std::min(g.height - 1, j1); ++j)
        for (int i = std::max(0, i0); i <= std::min(g.width - 1, i1); ++i) g.at(i, j) = c;
}

// Recursive binary partition of [i0, i1] x [j0, j1] (inclusive, free
// interior). Each splitting wall carries one door, which keeps the free space
// connected by construction.
inline void split_rooms(OccupancyGrid& g, const StableRng& rng, std::uint64_t& node,
                        int i0, int i1, int j0, int j1, int min_cells, int door_cells) {
    const std::uint64_t id = node++;
    const int w = i1 - i0 + 1, h = j1 - j0 + 1;
    const bool can_x = w >= 2 * min_cells + 1;  // vertical wall splits x
    const bool can_y = h >= 2 * min_cells + 1;
    if (!can_x && !can_y) return;

    bool split_x;
    if (can_x && can_y)
        split_x = (w > h) || (w == h && rng.uniform(id * 8 + 0) < 0.5);
    else
        split_x = can_x;

    if (split_x) {
        const int lo = i0 + min_cells, hi = i1 - min_cells;
        const int at = lo + static_cast<int>(rng.below(id * 8 + 1, static_cast<std::uint64_t>(hi - lo + 1)));
        for (int j = j0; j <= j1; ++j) g.at(at, j) = Cell::Occupied;
        const int dmax = j1 - door_cells + 1;
        const int door = j0 + static_cast<int>(rng.below(id * 8 + 2, static_cast<std::uint64_t>(dmax - j0 + 1)));
        for (int j = door; j < door + door_cells; ++j) g.at(at, j) = Cell::Free;
        split_rooms(g, rng, node, i0, at - 1, j0, j1, min_cells, door_cells);
        split_rooms(g, rng, node, at + 1, i1, j0, j1, min_cells, door_cells);
    } else {
        const int lo = j0 + min_cells, hi = j1 - min_cells;
        const int at = lo + static_cast<int>(rng.below(id * 8 + 3, static_cast<std::uint64_t>(hi - lo + 1)));
        for (int i = i0; i <= i1; ++i) g.at(i, at) = Cell::Occupied;
        const int dmax = i1 - door_cells + 1;
        const int door = i0 + static_cast<int>(rng.below(id * 8 + 4, static_cast<std::uint64_t>(dmax - i0 + 1)));
        for (int i = door; i < door + door_cells; ++i) g.at(i, at) = Cell::Free;
        split_rooms(g, rng, node, i0, i1, j0, at - 1, min_cells, door_cells);
        split_rooms(g, rng, node, i0, i1, at + 1, j1, min_cells, door_cells);
    }
}

// Square pillars with a guaranteed free ring, so they never merge with walls
// or each other and cannot disconnect the free space.
inline void scatter_pillars(OccupancyGrid& g, const StableRng& rng, int count) {
    const int margin = 2;
    for (int p = 0; p < count; ++p) {
        const std::uint64_t base = static_cast<std::uint64_t>(p) * 8;
        const int size = 2 + static_cast<int>(rng.below(base + 0, 4));  // 2..5 cells
        const int i0 = margin + static_cast<int>(rng.below(base + 1, static_cast<std::uint64_t>(std::max(1, g.width - size - 2 * margin))));
        const int j0 = margin + static_cast<int>(rng.below(base + 2, static_cast<std::uint64_t>(std::max(1, g.height - size - 2 * margin))));
        bool clear = true;
        for (int j = j0 - 1; j <= j0 + size && clear; ++j)
            for (int i = i0 - 1; i <= i0 + size && clear; ++i)
                if (!g.in_bounds(i, j) || g.occupied(i, j)) clear = false;
        if (!clear) continue;
        fill_rect(g, i0, i0 + size - 1, j0, j0 + size - 1, Cell::Occupied);
    }
}

inline void carve_maze(OccupancyGrid& g, const StableRng& rng, int pitch, int wall) {
    const int passage = pitch - wall;
    const int cols = (g.width - wall - 2) / pitch;
    const int rows = (g.height - wall - 2) / pitch;
    if (cols < 1 || rows < 1) {
        fill_rect(g, 1, g.width - 2, 1, g.height - 2, Cell::Free);
        return;
    }
    auto cell_origin = [&](int c, int r) {
        return std::pair<int, int>{1 + wall + c * pitch, 1 + wall + r * pitch};
    };
    auto carve_cell = [&](int c, int r) {
        const auto [i0, j0] = cell_origin(c, r);
        fill_rect(g, i0, i0 + passage - 1, j0, j0 + passage - 1, Cell::Free);
    };
    auto carve_link = [&](int c0, int r0, int c1, int r1) {
        const auto [a0, b0] = cell_origin(c0, r0);
        const auto [a1, b1] = cell_origin(c1, r1);
        fill_rect(g, std::min(a0, a1), std::max(a0, a1) + passage - 1,
                  std::min(b0, b1), std::max(b0, b1) + passage - 1, Cell::Free);
    };

    // iterative backtracker over the lattice
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(cols) * rows, 0);
    std::vector<std::pair<int, int>> stack;
    std::uint64_t ctr = 0;
    stack.emplace_back(0, 0);
    seen[0] = 1;
    carve_cell(0, 0);
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    while (!stack.empty()) {
        const auto [c, r] = stack.back();
        int options[4], n_opt = 0;
        for (int d = 0; d < 4; ++d) {
            const int nc = c + di[d], nr = r + dj[d];
            if (nc < 0 || nc >= cols || nr < 0 || nr >= rows) continue;
            if (!seen[static_cast<std::size_t>(nr) * cols + nc]) options[n_opt++] = d;
        }
        if (n_opt == 0) {
            stack.pop_back();
            continue;
        }
        const int d = options[rng.below(ctr++, static_cast<std::uint64_t>(n_opt))];
        const int nc = c + di[d], nr = r + dj[d];
        seen[static_cast<std::size_t>(nr) * cols + nc] = 1;
        carve_cell(nc, nr);
        carve_link(c, r, nc, nr);
        stack.emplace_back(nc, nr);
    }
}

}  // namespace detail

/// Deterministic procedural floorplan: connected free space, fully occupied
/// outer boundary, at least 30% free cells.
inline OccupancyGrid gen_floorplan(std::uint64_t seed, double extent_m, MapStyle style,
                                   double resolution = 0.1, double corridor_width_m = 2.0) {
    if (!(extent_m >= 2.0)) throw ConfigError("extent_m", "extent must be at least 2 m");
    if (!(resolution > 0.0)) throw ConfigError("resolution", "resolution must be positive");

    const int n = std::max(8, static_cast<int>(std::lround(extent_m / resolution)));
    OccupancyGrid g(n, n, resolution, 0.0, 0.0, Cell::Free);

    // boundary ring
    detail::fill_rect(g, 0, n - 1, 0, 0, Cell::Occupied);
    detail::fill_rect(g, 0, n - 1, n - 1, n - 1, Cell::Occupied);
    detail::fill_rect(g, 0, 0, 0, n - 1, Cell::Occupied);
    detail::fill_rect(g, n - 1, n - 1, 0, n - 1, Cell::Occupied);

    switch (style) {
        case MapStyle::Rooms: {
            const int min_cells = std::max(4, static_cast<int>(std::lround(3.0 / resolution)));
            const int door_cells = std::max(2, static_cast<int>(std::lround(1.2 / resolution)));
            std::uint64_t node = 0;
            detail::split_rooms(g, StableRng(seed, rng_stream::kMapSplit), node, 1, n - 2, 1,
                                n - 2, min_cells, door_cells);
            const int pillars = std::max(2, n * n / 4000);
            detail::scatter_pillars(g, StableRng(seed, rng_stream::kMapObstacle), pillars);
            break;
        }
        case MapStyle::Maze: {
            detail::fill_rect(g, 1, n - 2, 1, n - 2, Cell::Occupied);
            const int pitch = std::max(3, static_cast<int>(std::lround(1.6 / resolution)));
            const int wall = std::max(1, static_cast<int>(std::lround(0.4 / resolution)));
            detail::carve_maze(g, StableRng(seed, rng_stream::kMapSplit), pitch, wall);
            break;
        }
        case MapStyle::Corridor: {
            detail::fill_rect(g, 1, n - 2, 1, n - 2, Cell::Occupied);
            const int w = std::max(1, static_cast<int>(std::lround(corridor_width_m / resolution)));
            const int j0 = std::max(1, (n - w) / 2);
            detail::fill_rect(g, 1, n - 2, j0, std::min(n - 2, j0 + w - 1), Cell::Free);
            break;
        }
    }
    return g;
}

/// Ground-truth poses plus the noisy ego-motion measurements between them.
struct Trajectory {
    std::vector<Pose2> poses;          // length T
    std::vector<MotionInput> motions;  // length T - 1, measured (noisy)
};

/// Random collision-free walk through free space. Measured motions are the
/// true relative motions plus Gaussian noise with the given sigmas, which the
/// MotionInput also carries as its assumed transition noise.
inline Trajectory gen_trajectory(const OccupancyGrid& grid, std::uint64_t seed, int frames,
                                 double step_mean, double sigma_x, double sigma_y,
                                 double sigma_phi) {
    if (frames < 1) throw ConfigError("frames", "need at least one frame");
    std::vector<int> free_cells;
    for (int j = 0; j < grid.height; ++j)
        for (int i = 0; i < grid.width; ++i)
            if (!grid.occupied(i, j)) free_cells.push_back(j * grid.width + i);
    if (free_cells.empty()) throw EmptyFreeSpace("cannot place a trajectory");

    const StableRng start_rng(seed, rng_stream::kTrajStart);
    const StableRng step_rng(seed, rng_stream::kTrajStep);
    const StableRng meas_rng(seed, rng_stream::kTrajMeasure);
    const double clearance = std::max(0.05, grid.resolution * 0.5);

    // Start in a free cell with a little clearance ahead.
    Trajectory traj;
    for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt >= 1000) throw StuckTrajectory("no valid start pose after 1000 attempts");
        const int cell = free_cells[start_rng.below(attempt * 4 + 0, free_cells.size())];
        Pose2 p{grid.center_x(cell % grid.width), grid.center_y(cell / grid.width),
                start_rng.uniform(attempt * 4 + 1, -kPi, kPi)};
        const RayHit ahead = cast_ray(grid, p.x, p.y, p.phi, step_mean + clearance);
        if (ahead.hit) continue;  // facing a wall closer than one step
        traj.poses.push_back(p.normalized());
        break;
    }

    constexpr int kMaxAttempts = 80;
    for (int t = 1; t < frames; ++t) {
        const Pose2 prev = traj.poses.back();
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            const std::uint64_t base = (static_cast<std::uint64_t>(t) * kMaxAttempts + attempt) * 4;
            double heading;
            if (attempt < 20) {
                heading = prev.phi + 0.45 * step_rng.normal(base + 0);
            } else {
                heading = step_rng.uniform(base + 3, -kPi, kPi);  // desperate turn
            }
            double step = step_mean * (0.6 + 0.8 * step_rng.uniform(base + 2));
            const RayHit blocked = cast_ray(grid, prev.x, prev.y, heading, step + clearance);
            if (blocked.hit) continue;
            Pose2 next{prev.x + step * std::cos(heading), prev.y + step * std::sin(heading),
                       heading};
            if (!grid.contains(next.x, next.y) ||
                grid.occupied(grid.cell_x(next.x), grid.cell_y(next.y)))
                continue;
            traj.poses.push_back(next.normalized());
            placed = true;
        }
        if (!placed)
            throw StuckTrajectory("no collision-free step at frame " + std::to_string(t));

        // true relative motion in the previous pose's frame
        const Pose2& cur = traj.poses.back();
        const double c = std::cos(prev.phi), s = std::sin(prev.phi);
        const double dxw = cur.x - prev.x, dyw = cur.y - prev.y;
        const double tx = c * dxw + s * dyw;
        const double ty = -s * dxw + c * dyw;
        const double tphi = wrap_angle(cur.phi - prev.phi);

        const std::uint64_t mbase = static_cast<std::uint64_t>(t) * 4;
        const double mx = tx + (sigma_x > 0.0 ? sigma_x * meas_rng.normal(mbase + 0) : 0.0);
        const double my = ty + (sigma_y > 0.0 ? sigma_y * meas_rng.normal(mbase + 1) : 0.0);
        const double mphi = tphi + (sigma_phi > 0.0 ? sigma_phi * meas_rng.normal(mbase + 2) : 0.0);
        traj.motions.emplace_back(mx, my, mphi, sigma_x, sigma_y, sigma_phi);
    }
    return traj;
}

enum class Calibration { Oracle, Fixed, Miscalibrated };

/// Synthetic depth-observer noise. Sampling uses the raw scales (a base_scale
/// of 0 gives exact ground-truth depths); reported scales are floored at
/// kMinScale. In sector mode each frame corrupts one contiguous angular sector
/// covering corrupt_prob of the FoV instead of i.i.d. rays.
struct NoiseModel {
    double base_scale = 0.0;
    double corrupt_prob = 0.0;
    double corrupt_scale = 0.0;
    Calibration calibration = Calibration::Oracle;
    double fixed_b0 = 0.0;           // Calibration::Fixed
    double miscalibration = 1.0;     // Calibration::Miscalibrated
    bool sector_mode = true;
    std::uint64_t rng_seed = 0;

    static NoiseModel ground_truth(std::uint64_t seed = 0) {
        NoiseModel n;
        n.rng_seed = seed;
        return n;
    }

    void validate() const {
        if (base_scale < 0.0 || corrupt_scale < 0.0)
            throw ConfigError("noise.scale", "scales must be non-negative");
        if (corrupt_prob < 0.0 || corrupt_prob > 1.0)
            throw ConfigError("noise.corrupt_prob", "must lie in [0, 1]");
        if (calibration == Calibration::Miscalibrated && !(miscalibration > 0.0))
            throw ConfigError("noise.miscalibration", "factor must be positive");
    }
};

/// Simulated uncertainty-annotated observation of the floorplan from a pose.
/// Deterministic in (rng_seed, frame, ray).
inline DepthObservation observe(const OccupancyGrid& grid, const Pose2& pose,
                                const CameraModel& camera, int n_rays, const NoiseModel& noise,
                                std::uint64_t frame, double max_range = kDefaultMaxRange) {
    noise.validate();
    DepthObservation obs;
    obs.ray_angles = equiangular_rays(camera.hfov(), n_rays);
    obs.depths.assign(n_rays, 0.0);
    obs.scales.assign(n_rays, kMinScale);
    obs.valid.assign(n_rays, 0);

    const auto gt = floorplan_depth(grid, pose, obs.ray_angles, max_range);

    // decide which rays are corrupted
    std::vector<std::uint8_t> corrupted(n_rays, 0);
    if (noise.corrupt_prob > 0.0) {
        if (noise.sector_mode) {
            const StableRng rng(noise.rng_seed, rng_stream::kObsSector, frame);
            const double fov = camera.hfov();
            const double width = noise.corrupt_prob * fov;
            const double center = rng.uniform(0, -fov / 2.0, fov / 2.0);
            for (int j = 0; j < n_rays; ++j)
                corrupted[j] = std::abs(obs.ray_angles[j] - center) <= width / 2.0;
        } else {
            const StableRng rng(noise.rng_seed, rng_stream::kObsCorrupt, frame);
            for (int j = 0; j < n_rays; ++j)
                corrupted[j] = rng.uniform(static_cast<std::uint64_t>(j)) < noise.corrupt_prob;
        }
    }

    const StableRng rng(noise.rng_seed, rng_stream::kObsNoise, frame);
    for (int j = 0; j < n_rays; ++j) {
        if (!gt[j].has_value()) continue;
        obs.valid[j] = 1;
        const double true_scale = corrupted[j] ? noise.corrupt_scale : noise.base_scale;
        const double err = true_scale > 0.0 ? rng.laplace(static_cast<std::uint64_t>(j), true_scale) : 0.0;
        obs.depths[j] = *gt[j] + err;
        double reported = true_scale;
        if (noise.calibration == Calibration::Fixed)
            reported = noise.fixed_b0;
        else if (noise.calibration == Calibration::Miscalibrated)
            reported = true_scale * noise.miscalibration;
        obs.scales[j] = std::max(reported, kMinScale);
    }
    return obs;
}

}  // namespace floorloc
