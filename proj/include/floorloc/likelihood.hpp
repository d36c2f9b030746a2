#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "floorloc/grid.hpp"
#include "floorloc/observation.hpp"
#include "floorloc/parallel.hpp"
#include "floorloc/raycast.hpp"

namespace floorloc {

/// How Eq.-style per-ray scales enter the observation model: one scale per ray
/// (the full model) or a single constant scale for every ray (the
/// "no uncertainties" baseline).
struct UncertaintyMode {
    bool per_ray = true;
    double b0 = 0.0;

    static UncertaintyMode use_per_ray() { return {true, 0.0}; }
    static UncertaintyMode fixed(double b) { return {false, std::max(b, kMinScale)}; }
};

/// Log observation likelihood over the pose grid: log p(o | s) for every
/// (x-cell, y-cell, orientation bin). Occupied cells carry -inf. Layout is
/// orientation-major: value(k, j, i) at ((k*ny + j)*nx + i).
struct LikelihoodVolume {
    int nx = 0;
    int ny = 0;
    int n_theta = 0;
    double resolution = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    bool no_valid_rays = false;  // set when the observation had no usable ray
    std::vector<double> log_values;

    std::size_t index(int k, int j, int i) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    double at(int k, int j, int i) const { return log_values[index(k, j, i)]; }
    std::size_t size() const { return log_values.size(); }
};

namespace detail {

/// Per-frame tables for one observation under one uncertainty mode: compacted
/// valid rays with their depths, inverse scales and normalizers.
struct FramePrep {
    std::vector<int> ray;        // original ray index per valid ray
    std::vector<double> depth;   // observed depth per valid ray
    std::vector<double> inv_b;   // 1 / b per valid ray
    std::vector<double> cos_a;   // cos(alpha_j) per valid ray
    double log_norm_sum = 0.0;   // sum of -log(2 b_j) over valid rays
    int count = 0;
};

}  // namespace detail

/// Evaluates the product-of-Laplace observation model (one term per ray, scale
/// per ray or fixed) over every free cell center and orientation bin center.
///
/// Ranges from a pose only depend on the map, so the engine casts each ray
/// once per (free cell, world angle) and reuses the table for every frame of a
/// sequence. World angles that coincide across (bin, ray) pairs — which
/// happens whenever the ray spacing divides the bin spacing — share one table
/// entry.
class LikelihoodEngine {
  public:
    LikelihoodEngine(const OccupancyGrid& grid, std::vector<double> ray_angles, int n_theta,
                     double max_range = kDefaultMaxRange,
                     std::size_t cache_budget_bytes = kDefaultCacheBudget)
        : grid_(&grid), ray_angles_(std::move(ray_angles)), n_theta_(n_theta),
          max_range_(max_range) {
        if (n_theta_ < 1) throw ConfigError("n_theta", "must be at least 1");

        const int nx = grid.width, ny = grid.height;
        dense_index_.assign(static_cast<std::size_t>(nx) * ny, -1);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                if (!grid.occupied(i, j)) {
                    dense_index_[static_cast<std::size_t>(j) * nx + i] =
                        static_cast<std::int32_t>(free_cells_.size());
                    free_cells_.push_back(j * nx + i);
                }
        if (free_cells_.empty()) throw EmptyFreeSpace("likelihood volume needs free cells");

        build_angle_table();
        const std::size_t bytes = free_cells_.size() * angles_.size() * sizeof(double);
        if (bytes > cache_budget_bytes)
            throw ConfigError("cache_budget",
                              "range table needs " + std::to_string(bytes >> 20) +
                                  " MiB; coarsen the grid or raise the budget");
        build_range_table();
    }

    const OccupancyGrid& grid() const { return *grid_; }
    const std::vector<double>& ray_angles() const { return ray_angles_; }
    int n_theta() const { return n_theta_; }
    double max_range() const { return max_range_; }
    std::size_t free_count() const { return free_cells_.size(); }
    std::int32_t dense_index(int i, int j) const {
        return dense_index_[static_cast<std::size_t>(j) * grid_->width + i];
    }
    int free_cell(std::size_t dense) const { return free_cells_[dense]; }

    detail::FramePrep prepare(const DepthObservation& obs, UncertaintyMode mode) const {
        if (obs.size() != static_cast<int>(ray_angles_.size()))
            throw LengthMismatch("observation has " + std::to_string(obs.size()) +
                                 " rays, engine expects " + std::to_string(ray_angles_.size()));
        detail::FramePrep prep;
        for (int j = 0; j < obs.size(); ++j) {
            if (!obs.valid[j]) continue;
            const double b = mode.per_ray ? std::max(obs.scales[j], kMinScale) : mode.b0;
            prep.ray.push_back(j);
            prep.depth.push_back(obs.depths[j]);
            prep.inv_b.push_back(1.0 / b);
            prep.cos_a.push_back(std::cos(ray_angles_[j]));
            prep.log_norm_sum += -std::log(2.0 * b);
        }
        prep.count = static_cast<int>(prep.ray.size());
        return prep;
    }

    /// log p(o | s) for every orientation bin of one free cell, written to
    /// out[0..n_theta). Misses in the range table enter as a residual of
    /// max_range, so poses that predict open space where the observation saw a
    /// wall are penalized.
    void eval_cell(std::size_t dense, const detail::FramePrep& prep, double* out) const {
        const double* row = ranges_.data() + dense * angles_.size();
        const std::int32_t* aidx = angle_index_.data();
        const int n_rays = static_cast<int>(ray_angles_.size());
        for (int k = 0; k < n_theta_; ++k) {
            const std::int32_t* krow = aidx + static_cast<std::size_t>(k) * n_rays;
            double weighted_residuals = 0.0;
            for (int m = 0; m < prep.count; ++m) {
                const double r = row[krow[prep.ray[m]]];
                const double res =
                    r >= 0.0 ? std::abs(prep.depth[m] - r * prep.cos_a[m]) : max_range_;
                weighted_residuals += res * prep.inv_b[m];
            }
            out[k] = prep.log_norm_sum - weighted_residuals;
        }
    }

    LikelihoodVolume full_volume(const DepthObservation& obs, UncertaintyMode mode) const {
        const auto prep = prepare(obs, mode);
        LikelihoodVolume vol;
        vol.nx = grid_->width;
        vol.ny = grid_->height;
        vol.n_theta = n_theta_;
        vol.resolution = grid_->resolution;
        vol.origin_x = grid_->origin_x;
        vol.origin_y = grid_->origin_y;
        vol.no_valid_rays = (prep.count == 0);
        vol.log_values.assign(static_cast<std::size_t>(vol.nx) * vol.ny * n_theta_,
                              -std::numeric_limits<double>::infinity());
        const std::size_t slice = static_cast<std::size_t>(vol.nx) * vol.ny;

        parallel_blocks(free_cells_.size(), [&](std::size_t lo, std::size_t hi) {
            std::vector<double> cell_out(n_theta_);
            for (std::size_t d = lo; d < hi; ++d) {
                const std::size_t cell = free_cells_[d];
                if (prep.count == 0) {
                    for (int k = 0; k < n_theta_; ++k) vol.log_values[k * slice + cell] = 0.0;
                    continue;
                }
                eval_cell(d, prep, cell_out.data());
                for (int k = 0; k < n_theta_; ++k) vol.log_values[k * slice + cell] = cell_out[k];
            }
        });
        return vol;
    }

    static constexpr std::size_t kDefaultCacheBudget = std::size_t{3} << 30;  // 3 GiB

  private:
    // Distinct world angles over (bin, ray) pairs. Mathematical duplicates are
    // detected by quantizing the wrapped angle; the cast uses the first pair's
    // angle value, which agrees with the others to one rounding of the sum.
    void build_angle_table() {
        const int n_rays = static_cast<int>(ray_angles_.size());
        angle_index_.assign(static_cast<std::size_t>(n_theta_) * n_rays, 0);
        std::unordered_map<long long, std::int32_t> buckets;
        for (int k = 0; k < n_theta_; ++k) {
            const double phi = theta_bin_center(k, n_theta_);
            for (int j = 0; j < n_rays; ++j) {
                const double w = phi + ray_angles_[j];
                const long long key = std::llround(wrap_angle(w) * 1e12);
                auto [it, inserted] = buckets.try_emplace(key, static_cast<std::int32_t>(angles_.size()));
                if (inserted) angles_.push_back(w);
                angle_index_[static_cast<std::size_t>(k) * n_rays + j] = it->second;
            }
        }
    }

    void build_range_table() {
        const int nx = grid_->width;
        const std::size_t n_angles = angles_.size();
        ranges_.assign(free_cells_.size() * n_angles, -1.0);
        parallel_blocks(free_cells_.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t d = lo; d < hi; ++d) {
                const int cell = free_cells_[d];
                const double cx = grid_->center_x(cell % nx);
                const double cy = grid_->center_y(cell / nx);
                double* row = ranges_.data() + d * n_angles;
                for (std::size_t a = 0; a < n_angles; ++a) {
                    const RayHit h = cast_ray(*grid_, cx, cy, angles_[a], max_range_);
                    row[a] = h.hit ? h.range : -1.0;
                }
            }
        });
    }

    const OccupancyGrid* grid_;
    std::vector<double> ray_angles_;
    int n_theta_;
    double max_range_;

    std::vector<std::int32_t> dense_index_;  // grid cell -> dense free index or -1
    std::vector<int> free_cells_;            // dense free index -> grid cell
    std::vector<double> angles_;             // distinct world angles
    std::vector<std::int32_t> angle_index_;  // (k, j) -> index into angles_
    std::vector<double> ranges_;             // free cell x distinct angle; miss = -1
};

/// One-shot evaluation of the observation model over the full pose grid.
/// Sequence runners should hold a LikelihoodEngine instead and reuse its
/// range table across frames.
inline LikelihoodVolume log_likelihood_volume(const OccupancyGrid& grid,
                                              const DepthObservation& obs, int n_theta,
                                              double max_range = kDefaultMaxRange,
                                              UncertaintyMode mode = UncertaintyMode::use_per_ray()) {
    LikelihoodEngine engine(grid, obs.ray_angles, n_theta, max_range);
    return engine.full_volume(obs, mode);
}

}  // namespace floorloc
