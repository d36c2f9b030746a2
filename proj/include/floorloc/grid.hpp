#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "floorloc/errors.hpp"

namespace floorloc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle into [-pi, pi).
inline double wrap_angle(double a) {
    a = std::remainder(a, kTwoPi);  // (-pi, pi]
    if (a >= kPi) a -= kTwoPi;
    if (a < -kPi) a += kTwoPi;
    return a;
}

/// SE(2) pose. phi is kept in [-pi, pi); use normalized() after arithmetic.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double phi = 0.0;

    Pose2 normalized() const { return {x, y, wrap_angle(phi)}; }
};

enum class Cell : std::uint8_t { Free = 0, Occupied = 1 };

/// Binary occupancy grid. Cell (i, j) covers the half-open world rectangle
/// [x0 + i*res, x0 + (i+1)*res) x [y0 + j*res, y0 + (j+1)*res), with row 0 at
/// the lowest y. Immutable by convention once built; all queries are const.
struct OccupancyGrid {
    int width = 0;   // cells along x
    int height = 0;  // cells along y
    double resolution = 0.0;
    double origin_x = 0.0;  // world coords of the lower-left corner of cell (0,0)
    double origin_y = 0.0;
    std::vector<Cell> cells;  // row-major, index j*width + i

    OccupancyGrid() = default;
    OccupancyGrid(int w, int h, double res, double x0 = 0.0, double y0 = 0.0,
                  Cell fill = Cell::Free)
        : width(w), height(h), resolution(res), origin_x(x0), origin_y(y0),
          cells(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw ZeroArea("grid must be at least 1x1");
        if (!(res > 0.0)) throw ZeroArea("resolution must be positive");
    }

    Cell at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
    Cell& at(int i, int j) { return cells[static_cast<std::size_t>(j) * width + i]; }
    bool occupied(int i, int j) const { return at(i, j) == Cell::Occupied; }
    bool in_bounds(int i, int j) const {
        return i >= 0 && i < width && j >= 0 && j < height;
    }
    std::size_t size() const { return cells.size(); }

    double extent_x() const { return width * resolution; }
    double extent_y() const { return height * resolution; }

    /// Cell index containing world point (x, y); no bounds check.
    int cell_x(double x) const {
        return static_cast<int>(std::floor((x - origin_x) / resolution));
    }
    int cell_y(double y) const {
        return static_cast<int>(std::floor((y - origin_y) / resolution));
    }
    bool contains(double x, double y) const {
        const int i = cell_x(x), j = cell_y(y);
        return in_bounds(i, j);
    }

    /// World coordinates of the center of cell (i, j).
    double center_x(int i) const { return origin_x + (i + 0.5) * resolution; }
    double center_y(int j) const { return origin_y + (j + 0.5) * resolution; }

    std::size_t count_free() const {
        std::size_t n = 0;
        for (Cell c : cells) n += (c == Cell::Free);
        return n;
    }
};

/// Boolean mask, true where the cell is Free. Same row-major layout as cells.
inline std::vector<bool> free_space_mask(const OccupancyGrid& grid) {
    std::vector<bool> mask(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) mask[n] = (grid.cells[n] == Cell::Free);
    return mask;
}

/// Orientation bin center k of n bins: -pi + 2*pi*k/n, evaluated as
/// pi*(2k - n)/n so that the middle bin is exactly 0.0. Every component that
/// enumerates poses uses this one expression so volumes line up bit-exactly.
inline double theta_bin_center(int k, int n_theta) {
    return (kPi * (2.0 * k - n_theta)) / n_theta;
}

/// Resample to a coarser resolution; a coarse cell is Occupied when any fine
/// cell overlapping its rectangle (with positive area) is. Conservative: walls
/// dilate, free space never grows.
inline OccupancyGrid coarsen_grid(const OccupancyGrid& fine, double new_resolution) {
    if (!(new_resolution > fine.resolution)) return fine;
    const int nw = static_cast<int>(std::ceil(fine.extent_x() / new_resolution - 1e-9));
    const int nh = static_cast<int>(std::ceil(fine.extent_y() / new_resolution - 1e-9));
    OccupancyGrid coarse(std::max(nw, 1), std::max(nh, 1), new_resolution, fine.origin_x,
                         fine.origin_y);
    const double ratio = new_resolution / fine.resolution;
    for (int J = 0; J < coarse.height; ++J) {
        const int j0 = std::max(0, static_cast<int>(std::floor(J * ratio)));
        const int j1 = std::min(fine.height - 1, static_cast<int>(std::ceil((J + 1) * ratio - 1e-9)) - 1);
        for (int I = 0; I < coarse.width; ++I) {
            const int i0 = std::max(0, static_cast<int>(std::floor(I * ratio)));
            const int i1 =
                std::min(fine.width - 1, static_cast<int>(std::ceil((I + 1) * ratio - 1e-9)) - 1);
            bool occ = false;
            for (int j = j0; j <= j1 && !occ; ++j)
                for (int i = i0; i <= i1 && !occ; ++i) occ = fine.occupied(i, j);
            if (occ) coarse.at(I, J) = Cell::Occupied;
        }
    }
    return coarse;
}

}  // namespace floorloc
