#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "floorloc/grid.hpp"
#include "floorloc/likelihood.hpp"
#include "floorloc/parallel.hpp"

namespace floorloc {

/// Relative SE(2) motion measured in the previous pose's frame, with the
/// diagonal Gaussian transition noise it is assumed to carry.
struct MotionInput {
    double tx = 0.0;
    double ty = 0.0;
    double tphi = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double sigma_phi = 0.0;

    MotionInput() = default;
    MotionInput(double tx_, double ty_, double tphi_, double sx, double sy, double sphi)
        : tx(tx_), ty(ty_), tphi(wrap_angle(tphi_)), sigma_x(sx), sigma_y(sy), sigma_phi(sphi) {
        if (sx < 0.0 || sy < 0.0 || sphi < 0.0)
            throw ConfigError("motion.sigma", "noise std devs must be non-negative");
    }

    bool is_identity() const {
        return tx == 0.0 && ty == 0.0 && tphi == 0.0 && sigma_x == 0.0 && sigma_y == 0.0 &&
               sigma_phi == 0.0;
    }
};

/// Inclusive 2D index box; tracks the nonzero region of one orientation slice
/// so updates only touch live cells.
struct BinBox {
    int i0 = 0, i1 = -1, j0 = 0, j1 = -1;

    bool empty() const { return i1 < i0 || j1 < j0; }
    void include(int i, int j) {
        if (empty()) {
            i0 = i1 = i;
            j0 = j1 = j;
            return;
        }
        i0 = std::min(i0, i);
        i1 = std::max(i1, i);
        j0 = std::min(j0, j);
        j1 = std::max(j1, j);
    }
    void merge(const BinBox& o) {
        if (o.empty()) return;
        if (empty()) {
            *this = o;
            return;
        }
        i0 = std::min(i0, o.i0);
        i1 = std::max(i1, o.i1);
        j0 = std::min(j0, o.j0);
        j1 = std::max(j1, o.j1);
    }
    BinBox shifted(int di0, int di1, int dj0, int dj1) const {
        return {i0 + di0, i1 + di1, j0 + dj0, j1 + dj1};
    }
    BinBox clamped(int nx, int ny) const {
        BinBox b{std::max(i0, 0), std::min(i1, nx - 1), std::max(j0, 0), std::min(j1, ny - 1)};
        if (b.empty()) return BinBox{};
        return b;
    }
};

/// Posterior over SE(2) poses as a discrete probability volume: linear
/// probabilities summing to 1, one entry per (orientation bin, y-cell,
/// x-cell), exactly 0 on occupied cells. Orientation-major layout like
/// LikelihoodVolume. The grid pointer is non-owning; the map must outlive the
/// belief.
struct BeliefVolume {
    int nx = 0;
    int ny = 0;
    int n_theta = 0;
    double resolution = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    const OccupancyGrid* grid = nullptr;
    std::vector<double> values;
    std::vector<BinBox> boxes;  // per-bin nonzero bound; entries outside are 0

    std::size_t index(int k, int j, int i) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    double at(int k, int j, int i) const { return values[index(k, j, i)]; }
    std::size_t slice_size() const { return static_cast<std::size_t>(nx) * ny; }

    double total_mass() const {
        return parallel_sum(static_cast<std::size_t>(n_theta), [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const BinBox& b = boxes[k];
                if (b.empty()) continue;
                const double* slice = values.data() + k * slice_size();
                for (int j = b.j0; j <= b.j1; ++j)
                    for (int i = b.i0; i <= b.i1; ++i) s += slice[j * nx + i];
            }
            return s;
        });
    }

    /// Shannon entropy in nats over the nonzero entries.
    double entropy() const {
        return parallel_sum(static_cast<std::size_t>(n_theta), [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const BinBox& b = boxes[k];
                if (b.empty()) continue;
                const double* slice = values.data() + k * slice_size();
                for (int j = b.j0; j <= b.j1; ++j)
                    for (int i = b.i0; i <= b.i1; ++i) {
                        const double p = slice[j * nx + i];
                        if (p > 0.0) s -= p * std::log(p);
                    }
            }
            return s;
        });
    }
};

/// Uniform prior over (free cell, orientation) states.
inline BeliefVolume init_uniform(const OccupancyGrid& grid, int n_theta) {
    if (n_theta < 1) throw ConfigError("n_theta", "must be at least 1");
    const std::size_t n_free = grid.count_free();
    if (n_free == 0) throw EmptyFreeSpace("belief prior needs free cells");

    BeliefVolume b;
    b.nx = grid.width;
    b.ny = grid.height;
    b.n_theta = n_theta;
    b.resolution = grid.resolution;
    b.origin_x = grid.origin_x;
    b.origin_y = grid.origin_y;
    b.grid = &grid;
    b.values.assign(static_cast<std::size_t>(n_theta) * grid.width * grid.height, 0.0);

    BinBox free_box;
    const double p = 1.0 / (static_cast<double>(n_free) * n_theta);
    for (int j = 0; j < grid.height; ++j)
        for (int i = 0; i < grid.width; ++i)
            if (!grid.occupied(i, j)) free_box.include(i, j);
    for (int k = 0; k < n_theta; ++k) {
        double* slice = b.values.data() + static_cast<std::size_t>(k) * b.slice_size();
        for (int j = 0; j < grid.height; ++j)
            for (int i = 0; i < grid.width; ++i)
                if (!grid.occupied(i, j)) slice[j * grid.width + i] = p;
    }
    b.boxes.assign(n_theta, free_box);
    return b;
}

namespace detail {

/// Truncated discrete Gaussian taps exp(-o^2 / (2 sigma^2)) for |o| <= 3 sigma,
/// normalized to sum 1. sigma is in cell (or bin) units; sigma = 0 gives the
/// single-tap identity.
inline std::vector<double> gaussian_taps(double sigma, int& radius) {
    radius = sigma > 0.0 ? static_cast<int>(std::floor(3.0 * sigma)) : 0;
    std::vector<double> taps(2 * radius + 1, 1.0);
    if (radius > 0) {
        double sum = 0.0;
        for (int o = -radius; o <= radius; ++o) {
            taps[o + radius] = std::exp(-0.5 * (o * o) / (sigma * sigma));
            sum += taps[o + radius];
        }
        for (double& t : taps) t /= sum;
    }
    return taps;
}

/// Bilinear shift taps convolved with a wrapped Gaussian along the circular
/// orientation axis, as (offset, weight) pairs sorted by offset.
inline std::vector<std::pair<int, double>> orientation_taps(double shift_bins, double sigma_bins) {
    int radius = 0;
    const std::vector<double> gauss = gaussian_taps(sigma_bins, radius);
    const double fl = std::floor(shift_bins);
    const int base = static_cast<int>(fl);
    const double frac = shift_bins - fl;

    std::vector<std::pair<int, double>> taps;
    for (int o = -radius; o <= radius; ++o) {
        const double g = gauss[o + radius];
        taps.emplace_back(base + o, (1.0 - frac) * g);
        if (frac > 0.0) taps.emplace_back(base + 1 + o, frac * g);
    }
    std::sort(taps.begin(), taps.end());
    // merge duplicate offsets (overlap of the two bilinear combs)
    std::vector<std::pair<int, double>> merged;
    for (const auto& t : taps) {
        if (!merged.empty() && merged.back().first == t.first)
            merged.back().second += t.second;
        else
            merged.push_back(t);
    }
    return merged;
}

/// Reusable buffers for the transition update; remembers which regions it
/// dirtied so the next call zeroes only those.
struct TransitionWorkspace {
    std::vector<double> translated;
    std::vector<double> rotated;
    std::vector<double> scratch_a;  // one (nx*ny) plane per worker pass
    std::vector<double> scratch_b;
    std::vector<BinBox> translated_boxes;
    std::vector<BinBox> rotated_boxes;
    std::vector<BinBox> dirty_translated;
    std::vector<BinBox> dirty_rotated;
};

inline void zero_region(double* slice, int nx, const BinBox& b) {
    if (b.empty()) return;
    for (int j = b.j0; j <= b.j1; ++j)
        std::memset(slice + static_cast<std::size_t>(j) * nx + b.i0, 0,
                    static_cast<std::size_t>(b.i1 - b.i0 + 1) * sizeof(double));
}

}  // namespace detail

/// Prediction step of the histogram filter. Per orientation bin the (x, y)
/// slice is shifted by the body-frame translation rotated to that bin's
/// heading (bilinear mass splitting, so the mean displacement is exact) and
/// blurred with a separable truncated Gaussian; the orientation axis is then
/// circularly shifted by the rotation and blurred with a wrapped Gaussian.
/// Mass on occupied cells is removed before the final renormalization.
inline void transition_update_into(const BeliefVolume& in, const MotionInput& motion,
                                   BeliefVolume& out, detail::TransitionWorkspace& ws) {
    const int nx = in.nx, ny = in.ny, n_theta = in.n_theta;
    const std::size_t plane = in.slice_size();
    const OccupancyGrid& grid = *in.grid;

    if (&out != &in) {
        out.nx = nx;
        out.ny = ny;
        out.n_theta = n_theta;
        out.resolution = in.resolution;
        out.origin_x = in.origin_x;
        out.origin_y = in.origin_y;
        out.grid = in.grid;
    }

    if (motion.is_identity()) {
        if (&out != &in) {
            out.values = in.values;
            out.boxes = in.boxes;
        }
        return;
    }

    const std::size_t total = plane * n_theta;
    if (ws.translated.size() != total) {
        ws.translated.assign(total, 0.0);
        ws.rotated.assign(total, 0.0);
        ws.dirty_translated.assign(n_theta, BinBox{});
        ws.dirty_rotated.assign(n_theta, BinBox{});
    }
    ws.translated_boxes.assign(n_theta, BinBox{});
    ws.rotated_boxes.assign(n_theta, BinBox{});

    int rx = 0, ry = 0;
    const std::vector<double> kx = detail::gaussian_taps(motion.sigma_x / in.resolution, rx);
    const std::vector<double> ky = detail::gaussian_taps(motion.sigma_y / in.resolution, ry);

    // --- stage (a): per-bin planar shift + separable blur ---
    parallel_units(static_cast<std::size_t>(n_theta), [&](std::size_t k) {
        double* t_slice = ws.translated.data() + k * plane;
        detail::zero_region(t_slice, nx, ws.dirty_translated[k]);
        ws.dirty_translated[k] = BinBox{};

        const BinBox& src = in.boxes[k];
        if (src.empty()) return;

        const double phi = theta_bin_center(static_cast<int>(k), n_theta);
        const double c = std::cos(phi), s = std::sin(phi);
        const double sx = (motion.tx * c - motion.ty * s) / in.resolution;
        const double sy = (motion.tx * s + motion.ty * c) / in.resolution;
        const double flx = std::floor(sx), fly = std::floor(sy);
        const int ix = static_cast<int>(flx), iy = static_cast<int>(fly);
        const double fx = sx - flx, fy = sy - fly;
        const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
        const double w01 = (1.0 - fx) * fy, w11 = fx * fy;

        const double* src_slice = in.values.data() + k * plane;
        const BinBox shifted =
            src.shifted(ix, ix + (fx > 0.0 ? 1 : 0), iy, iy + (fy > 0.0 ? 1 : 0)).clamped(nx, ny);
        if (shifted.empty()) return;

        // Scratch planes are written before they are read on exactly the box
        // region each pass uses, so they are left uninitialized.
        auto plane_a_buf = std::make_unique_for_overwrite<double[]>(plane);
        double* plane_a = plane_a_buf.get();
        auto src_at = [&](int i, int j) -> double {
            if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
            return src_slice[static_cast<std::size_t>(j) * nx + i];
        };
        for (int j = shifted.j0; j <= shifted.j1; ++j)
            for (int i = shifted.i0; i <= shifted.i1; ++i) {
                double v = w00 * src_at(i - ix, j - iy);
                if (fx > 0.0) v += w10 * src_at(i - ix - 1, j - iy);
                if (fy > 0.0) v += w01 * src_at(i - ix, j - iy - 1);
                if (fx > 0.0 && fy > 0.0) v += w11 * src_at(i - ix - 1, j - iy - 1);
                plane_a[static_cast<std::size_t>(j) * nx + i] = v;
            }

        BinBox box = shifted;
        const double* cur = plane_a;
        std::unique_ptr<double[]> plane_b_buf;
        if (rx > 0) {
            plane_b_buf = std::make_unique_for_overwrite<double[]>(plane);
            double* plane_b = plane_b_buf.get();
            const BinBox bx = box.shifted(-rx, rx, 0, 0).clamped(nx, ny);
            for (int j = bx.j0; j <= bx.j1; ++j)
                for (int i = bx.i0; i <= bx.i1; ++i) {
                    double v = 0.0;
                    for (int o = -rx; o <= rx; ++o) {
                        const int si = i - o;
                        if (si < box.i0 || si > box.i1) continue;
                        v += kx[o + rx] * cur[static_cast<std::size_t>(j) * nx + si];
                    }
                    plane_b[static_cast<std::size_t>(j) * nx + i] = v;
                }
            box = bx;
            cur = plane_b;
        }
        BinBox out_box = box;
        if (ry > 0) out_box = box.shifted(0, 0, -ry, ry).clamped(nx, ny);
        for (int j = out_box.j0; j <= out_box.j1; ++j)
            for (int i = out_box.i0; i <= out_box.i1; ++i) {
                double v = 0.0;
                if (ry > 0) {
                    for (int o = -ry; o <= ry; ++o) {
                        const int sj = j - o;
                        if (sj < box.j0 || sj > box.j1) continue;
                        v += ky[o + ry] * cur[static_cast<std::size_t>(sj) * nx + i];
                    }
                } else {
                    v = cur[static_cast<std::size_t>(j) * nx + i];
                }
                t_slice[static_cast<std::size_t>(j) * nx + i] = v;
            }
        ws.translated_boxes[k] = out_box;
        ws.dirty_translated[k] = out_box;
    });

    // --- stage (b): circular shift + wrapped blur along orientation ---
    const double bin_width = kTwoPi / n_theta;
    const auto taps = detail::orientation_taps(motion.tphi / bin_width, motion.sigma_phi / bin_width);

    parallel_units(static_cast<std::size_t>(n_theta), [&](std::size_t k) {
        double* r_slice = ws.rotated.data() + k * plane;
        detail::zero_region(r_slice, nx, ws.dirty_rotated[k]);
        ws.dirty_rotated[k] = BinBox{};

        BinBox box;
        for (const auto& [offset, weight] : taps) {
            const int src = static_cast<int>(((static_cast<int>(k) - offset) % n_theta + n_theta) % n_theta);
            box.merge(ws.translated_boxes[src]);
        }
        if (box.empty()) return;

        for (const auto& [offset, weight] : taps) {
            const int src_k = static_cast<int>(((static_cast<int>(k) - offset) % n_theta + n_theta) % n_theta);
            const BinBox& sb = ws.translated_boxes[src_k];
            if (sb.empty()) continue;
            const double* src_slice = ws.translated.data() + static_cast<std::size_t>(src_k) * plane;
            for (int j = sb.j0; j <= sb.j1; ++j) {
                const std::size_t row = static_cast<std::size_t>(j) * nx;
                for (int i = sb.i0; i <= sb.i1; ++i) r_slice[row + i] += weight * src_slice[row + i];
            }
        }

        // remove mass that landed on walls
        for (int j = box.j0; j <= box.j1; ++j)
            for (int i = box.i0; i <= box.i1; ++i)
                if (grid.occupied(i, j)) r_slice[static_cast<std::size_t>(j) * nx + i] = 0.0;
        ws.rotated_boxes[k] = box;
        ws.dirty_rotated[k] = box;
    });

    // --- renormalize ---
    const double total_mass = parallel_sum(static_cast<std::size_t>(n_theta), [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const BinBox& b = ws.rotated_boxes[k];
            if (b.empty()) continue;
            const double* slice = ws.rotated.data() + k * plane;
            for (int j = b.j0; j <= b.j1; ++j)
                for (int i = b.i0; i <= b.i1; ++i) acc += slice[static_cast<std::size_t>(j) * nx + i];
        }
        return acc;
    });
    if (!(total_mass > 0.0))
        throw AllZeroPosterior("all probability mass left the map during the transition");

    const bool fresh = out.values.size() != total;
    if (fresh) out.values.assign(total, 0.0);
    const std::vector<BinBox> stale = fresh ? std::vector<BinBox>(n_theta, BinBox{}) : out.boxes;
    out.boxes.assign(n_theta, BinBox{});
    const double inv = 1.0 / total_mass;
    parallel_units(static_cast<std::size_t>(n_theta), [&](std::size_t k) {
        double* dst = out.values.data() + k * plane;
        if (k < stale.size()) detail::zero_region(dst, nx, stale[k]);
        const BinBox& b = ws.rotated_boxes[k];
        if (b.empty()) return;
        const double* src = ws.rotated.data() + k * plane;
        BinBox tight;
        for (int j = b.j0; j <= b.j1; ++j)
            for (int i = b.i0; i <= b.i1; ++i) {
                const double v = src[static_cast<std::size_t>(j) * nx + i];
                if (v > 0.0) {
                    dst[static_cast<std::size_t>(j) * nx + i] = v * inv;
                    tight.include(i, j);
                }
            }
        out.boxes[k] = tight;
    });
}

inline BeliefVolume transition_update(const BeliefVolume& belief, const MotionInput& motion) {
    BeliefVolume out;
    detail::TransitionWorkspace ws;
    transition_update_into(belief, motion, out, ws);
    return out;
}

/// Correction step: pointwise product with the observation likelihood followed
/// by renormalization (the 1/Z of the posterior). Inputs stay linear; the
/// likelihood arrives in log space and is exponentiated relative to its
/// maximum over the belief support.
inline BeliefVolume observation_update(const BeliefVolume& belief, const LikelihoodVolume& lik) {
    if (belief.nx != lik.nx || belief.ny != lik.ny || belief.n_theta != lik.n_theta)
        throw LengthMismatch("belief and likelihood volumes have different shapes");

    const std::size_t plane = belief.slice_size();
    double log_max = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < belief.n_theta; ++k) {
        const BinBox& b = belief.boxes[k];
        if (b.empty()) continue;
        const double* p = belief.values.data() + k * plane;
        const double* l = lik.log_values.data() + k * plane;
        for (int j = b.j0; j <= b.j1; ++j)
            for (int i = b.i0; i <= b.i1; ++i) {
                const std::size_t n = static_cast<std::size_t>(j) * belief.nx + i;
                if (p[n] > 0.0 && l[n] > log_max) log_max = l[n];
            }
    }
    if (!std::isfinite(log_max))
        throw AllZeroPosterior("likelihood is zero everywhere the prior has mass");

    BeliefVolume out = belief;
    double total = 0.0;
    for (int k = 0; k < belief.n_theta; ++k) {
        const BinBox& b = belief.boxes[k];
        if (b.empty()) continue;
        const double* l = lik.log_values.data() + k * plane;
        double* p = out.values.data() + k * plane;
        BinBox tight;
        for (int j = b.j0; j <= b.j1; ++j)
            for (int i = b.i0; i <= b.i1; ++i) {
                const std::size_t n = static_cast<std::size_t>(j) * belief.nx + i;
                if (p[n] <= 0.0) continue;
                p[n] *= std::exp(l[n] - log_max);
                if (p[n] > 0.0)
                    tight.include(i, j);
                else
                    p[n] = 0.0;
                total += p[n];
            }
        out.boxes[k] = tight;
    }
    if (!(total > 0.0)) throw AllZeroPosterior("posterior underflowed to zero everywhere");

    const double inv = 1.0 / total;
    for (int k = 0; k < belief.n_theta; ++k) {
        const BinBox& b = out.boxes[k];
        if (b.empty()) continue;
        double* p = out.values.data() + k * plane;
        for (int j = b.j0; j <= b.j1; ++j)
            for (int i = b.i0; i <= b.i1; ++i) p[static_cast<std::size_t>(j) * belief.nx + i] *= inv;
    }
    return out;
}

/// MAP estimate: the center pose of the highest-probability entry and its
/// mass. Ties go to the smallest (bin, row, column) index tuple.
inline std::pair<Pose2, double> map_pose(const BeliefVolume& belief) {
    double best = -1.0;
    int bk = 0, bj = 0, bi = 0;
    const std::size_t plane = belief.slice_size();
    for (int k = 0; k < belief.n_theta; ++k) {
        const BinBox& b = belief.boxes[k];
        if (b.empty()) continue;
        const double* slice = belief.values.data() + k * plane;
        for (int j = b.j0; j <= b.j1; ++j)
            for (int i = b.i0; i <= b.i1; ++i) {
                const double v = slice[static_cast<std::size_t>(j) * belief.nx + i];
                if (v > best) {
                    best = v;
                    bk = k;
                    bj = j;
                    bi = i;
                }
            }
    }
    Pose2 pose{belief.origin_x + (bi + 0.5) * belief.resolution,
               belief.origin_y + (bj + 0.5) * belief.resolution,
               theta_bin_center(bk, belief.n_theta)};
    return {pose, std::max(best, 0.0)};
}

/// Per-frame output of a sequence run.
struct FrameRecord {
    int frame = 0;
    Pose2 pose;          // MAP estimate
    double map_prob = 0.0;
    bool observed = false;
    bool no_valid_rays = false;
    double entropy = std::numeric_limits<double>::quiet_NaN();  // only if requested
};

/// Sequential estimator: owns the belief and applies transition / observation
/// updates frame by frame against a shared likelihood engine. The observation
/// update is fused with the engine so only cells inside the belief support are
/// evaluated; this matches observation_update up to normalization rounding.
class SequenceFilter {
  public:
    SequenceFilter(const LikelihoodEngine& engine, UncertaintyMode mode)
        : engine_(&engine), mode_(mode),
          belief_(init_uniform(engine.grid(), engine.n_theta())) {}

    const BeliefVolume& belief() const { return belief_; }
    void set_belief(BeliefVolume b) { belief_ = std::move(b); }
    void set_record_entropy(bool on) { record_entropy_ = on; }
    /// Full-volume mode evaluates the observation model everywhere instead of
    /// only on the belief support; results agree up to normalization rounding.
    void set_sparse(bool on) { sparse_ = on; }

    void predict(const MotionInput& motion) {
        if (motion.is_identity()) return;
        transition_update_into(belief_, motion, next_, workspace_);
        std::swap(belief_, next_);
    }

    /// Returns true when the observation had no valid rays (belief unchanged).
    bool update(const DepthObservation& obs) {
        if (sparse_) return fused_observe(obs);
        const LikelihoodVolume vol = engine_->full_volume(obs, mode_);
        belief_ = observation_update(belief_, vol);
        return vol.no_valid_rays;
    }

    FrameRecord step(const MotionInput& motion, const DepthObservation* obs) {
        predict(motion);
        FrameRecord rec;
        rec.frame = frame_++;
        if (obs != nullptr) {
            rec.observed = true;
            rec.no_valid_rays = update(*obs);
        }
        const auto [pose, prob] = map_pose(belief_);
        rec.pose = pose;
        rec.map_prob = prob;
        if (record_entropy_) rec.entropy = belief_.entropy();
        return rec;
    }

  private:
    /// Returns true when the observation had no valid rays (belief unchanged).
    bool fused_observe(const DepthObservation& obs) {
        const auto prep = engine_->prepare(obs, mode_);
        if (prep.count == 0) return true;

        const int nx = belief_.nx, ny = belief_.ny, n_theta = belief_.n_theta;
        const std::size_t plane = belief_.slice_size();

        // cells with support in any orientation bin, in row-major order
        cell_flags_.assign(plane, 0);
        for (int k = 0; k < n_theta; ++k) {
            const BinBox& b = belief_.boxes[k];
            if (b.empty()) continue;
            const double* slice = belief_.values.data() + k * plane;
            for (int j = b.j0; j <= b.j1; ++j)
                for (int i = b.i0; i <= b.i1; ++i) {
                    const std::size_t n = static_cast<std::size_t>(j) * nx + i;
                    if (slice[n] > 0.0) cell_flags_[n] = 1;
                }
        }
        live_cells_.clear();
        for (std::size_t n = 0; n < plane; ++n)
            if (cell_flags_[n]) live_cells_.push_back(static_cast<std::int32_t>(n));

        loglik_.resize(live_cells_.size() * n_theta);
        const std::size_t n_live = live_cells_.size();

        // pass A: evaluate the observation model on live cells; max over support
        std::vector<double> block_max(block_count(n_live),
                                      -std::numeric_limits<double>::infinity());
        parallel_blocks_indexed(n_live, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t c = lo; c < hi; ++c) {
                const std::int32_t cell = live_cells_[c];
                const std::int32_t dense = engine_->dense_index(cell % nx, cell / nx);
                double* out = loglik_.data() + c * n_theta;
                engine_->eval_cell(static_cast<std::size_t>(dense), prep, out);
                for (int k = 0; k < n_theta; ++k)
                    if (belief_.values[k * plane + cell] > 0.0 && out[k] > m) m = out[k];
            }
            block_max[blk] = m;
        });
        double log_max = -std::numeric_limits<double>::infinity();
        for (double m : block_max) log_max = std::max(log_max, m);
        if (!std::isfinite(log_max))
            throw AllZeroPosterior("likelihood is zero everywhere the prior has mass");

        // pass B: multiply, collect per-block mass and per-bin boxes
        const std::size_t blocks = block_count(n_live);
        std::vector<double> block_sum(blocks, 0.0);
        block_boxes_.assign(blocks * n_theta, BinBox{});
        parallel_blocks_indexed(n_live, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
            double s = 0.0;
            BinBox* boxes = block_boxes_.data() + blk * n_theta;
            for (std::size_t c = lo; c < hi; ++c) {
                const std::int32_t cell = live_cells_[c];
                const int i = static_cast<int>(cell % nx);
                const int j = static_cast<int>(cell / nx);
                const double* l = loglik_.data() + c * n_theta;
                for (int k = 0; k < n_theta; ++k) {
                    double& p = belief_.values[k * plane + cell];
                    if (p <= 0.0) continue;
                    p *= std::exp(l[k] - log_max);
                    if (p > 0.0) {
                        s += p;
                        boxes[k].include(i, j);
                    }
                }
            }
            block_sum[blk] = s;
        });
        double total = 0.0;
        for (double s : block_sum) total += s;
        if (!(total > 0.0)) throw AllZeroPosterior("posterior underflowed to zero everywhere");

        for (int k = 0; k < n_theta; ++k) {
            BinBox merged;
            for (std::size_t blk = 0; blk < blocks; ++blk) merged.merge(block_boxes_[blk * n_theta + k]);
            belief_.boxes[k] = merged;
        }
        const double inv = 1.0 / total;
        parallel_units(static_cast<std::size_t>(n_theta), [&](std::size_t k) {
            const BinBox& b = belief_.boxes[k];
            if (b.empty()) return;
            double* slice = belief_.values.data() + k * plane;
            for (int j = b.j0; j <= b.j1; ++j)
                for (int i = b.i0; i <= b.i1; ++i) {
                    const std::size_t n = static_cast<std::size_t>(j) * nx + i;
                    if (slice[n] > 0.0) slice[n] *= inv;
                }
        });
        return false;
    }

    const LikelihoodEngine* engine_;
    UncertaintyMode mode_;
    BeliefVolume belief_;
    BeliefVolume next_;
    detail::TransitionWorkspace workspace_;
    int frame_ = 0;
    bool record_entropy_ = false;
    bool sparse_ = true;

    std::vector<std::uint8_t> cell_flags_;
    std::vector<std::int32_t> live_cells_;
    std::vector<double> loglik_;
    std::vector<BinBox> block_boxes_;
};

/// Runs the filter over a frame-aligned sequence: per frame a transition
/// update, then an observation update when an observation is present and the
/// frame index is a multiple of obs_interval.
inline std::vector<FrameRecord> run_sequence(
    const OccupancyGrid& grid, const std::vector<std::optional<DepthObservation>>& observations,
    const std::vector<MotionInput>& motions, int n_theta, int obs_interval = 1,
    UncertaintyMode mode = UncertaintyMode::use_per_ray(), double max_range = kDefaultMaxRange,
    const std::function<void(const FrameRecord&, const BeliefVolume&)>& on_frame = nullptr) {
    if (observations.size() != motions.size())
        throw LengthMismatch("need one (possibly absent) observation per motion");
    if (obs_interval < 1) throw ConfigError("obs_interval", "must be at least 1");

    const std::vector<double>* angles = nullptr;
    for (const auto& o : observations)
        if (o.has_value()) {
            angles = &o->ray_angles;
            break;
        }

    std::vector<FrameRecord> records;
    records.reserve(motions.size());
    if (angles == nullptr) {
        // pure prediction run; no observation model needed
        BeliefVolume belief = init_uniform(grid, n_theta);
        detail::TransitionWorkspace ws;
        BeliefVolume next;
        for (std::size_t t = 0; t < motions.size(); ++t) {
            if (!motions[t].is_identity()) {
                transition_update_into(belief, motions[t], next, ws);
                std::swap(belief, next);
            }
            FrameRecord rec;
            rec.frame = static_cast<int>(t);
            const auto [pose, prob] = map_pose(belief);
            rec.pose = pose;
            rec.map_prob = prob;
            records.push_back(rec);
            if (on_frame) on_frame(rec, belief);
        }
        return records;
    }

    LikelihoodEngine engine(grid, *angles, n_theta, max_range);
    SequenceFilter filter(engine, mode);
    for (std::size_t t = 0; t < motions.size(); ++t) {
        const DepthObservation* obs = nullptr;
        if (t % static_cast<std::size_t>(obs_interval) == 0 && observations[t].has_value())
            obs = &observations[t].value();
        records.push_back(filter.step(motions[t], obs));
        if (on_frame) on_frame(records.back(), filter.belief());
    }
    return records;
}

}  // namespace floorloc
