#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "floorloc/camera.hpp"
#include "floorloc/errors.hpp"

namespace floorloc {

/// Minimal row-major 3x3 matrix; enough for the alignment algebra.
struct Mat3 {
    std::array<double, 9> m{};  // m[3*r + c]

    static Mat3 identity() {
        Mat3 out;
        out.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return out;
    }

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Mat3 operator*(const Mat3& o) const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) +
                            (*this)(r, 2) * o(2, c);
        return out;
    }

    std::array<double, 3> apply(const std::array<double, 3>& v) const {
        return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
                m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
                m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
    }

    Mat3 transposed() const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
        return out;
    }
};

// Axis conventions (camera x right, y down, z forward):
//   R_x(psi)   = [1, 0, 0; 0, cos psi, -sin psi; 0, sin psi, cos psi]
//   R_y(theta) = [cos theta, 0, sin theta; 0, 1, 0; -sin theta, 0, cos theta]
inline Mat3 rotation_x(double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    Mat3 r = Mat3::identity();
    r(1, 1) = c;
    r(1, 2) = -s;
    r(2, 1) = s;
    r(2, 2) = c;
    return r;
}

inline Mat3 rotation_y(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat3 r = Mat3::identity();
    r(0, 0) = c;
    r(0, 2) = s;
    r(2, 0) = -s;
    r(2, 2) = c;
    return r;
}

/// Combined rotation from the gravity-aligned frame to the camera frame,
/// roll about x then pitch about y.
inline Mat3 rotation_cg(double psi, double theta) {
    return rotation_y(theta) * rotation_x(psi);
}

inline Mat3 intrinsic_matrix(const CameraModel& cam) {
    Mat3 k = Mat3::identity();
    k(0, 0) = cam.fx;
    k(0, 2) = cam.cx;
    k(1, 1) = cam.fy;
    k(1, 2) = cam.cy;
    return k;
}

inline Mat3 intrinsic_inverse(const CameraModel& cam) {
    // Closed-form inverse of the upper-triangular K.
    Mat3 k = Mat3::identity();
    k(0, 0) = 1.0 / cam.fx;
    k(0, 2) = -cam.cx / cam.fx;
    k(1, 1) = 1.0 / cam.fy;
    k(1, 2) = -cam.cy / cam.fy;
    return k;
}

struct GravityAlignment {
    double roll_psi = 0.0;
    double pitch_theta = 0.0;
    Mat3 H;          // warp into the gravity-aligned frame: K * R_gc * K^-1
    Mat3 H_inverse;  // constructed as K * R_cg * K^-1, not numerically inverted
    std::vector<std::uint8_t> mask;  // height x width, row-major; 1 = valid
    int width = 0;
    int height = 0;

    bool mask_at(int u, int v) const { return mask[static_cast<std::size_t>(v) * width + u] != 0; }
    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto b : mask) n += b;
        return n;
    }
};

/// Homography that warps an image into the gravity-aligned frame, plus the
/// validity mask: aligned pixel (u, v) is valid iff its center maps back
/// inside the source image bounds under H^-1.
inline GravityAlignment alignment_homography(const CameraModel& cam, double psi, double theta) {
    if (!(std::abs(psi) < kPi / 2.0) || !(std::abs(theta) < kPi / 2.0))
        throw DegenerateTilt("|psi| and |theta| must be below pi/2");

    const Mat3 k = intrinsic_matrix(cam);
    const Mat3 k_inv = intrinsic_inverse(cam);
    const Mat3 r_cg = rotation_cg(psi, theta);

    GravityAlignment out;
    out.roll_psi = psi;
    out.pitch_theta = theta;
    out.width = cam.width;
    out.height = cam.height;
    if (psi == 0.0 && theta == 0.0) {
        out.H = Mat3::identity();
        out.H_inverse = Mat3::identity();
    } else {
        out.H = k * r_cg.transposed() * k_inv;
        out.H_inverse = k * r_cg * k_inv;
    }
    out.mask.assign(static_cast<std::size_t>(cam.width) * cam.height, 0);

    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const auto q = out.H_inverse.apply({u + 0.5, v + 0.5, 1.0});
            if (q[2] <= 0.0) continue;  // behind the camera
            const double sx = q[0] / q[2];
            const double sy = q[1] / q[2];
            if (sx >= 0.0 && sx < cam.width && sy >= 0.0 && sy < cam.height)
                out.mask[static_cast<std::size_t>(v) * cam.width + u] = 1;
        }
    }
    return out;
}

}  // namespace floorloc
