#include <catch2/catch_amalgamated.hpp>

#include "floorloc/raycast.hpp"
#include "floorloc/rng.hpp"
#include "oracles.hpp"

using namespace floorloc;

TEST_CASE("axis-aligned wall hit") {
    // 10 m empty corridor, one wall cell 3.0 m ahead of the origin
    OccupancyGrid g(100, 100, 0.1);
    const double ox = g.center_x(50), oy = g.center_y(50);
    g.at(50 + 30, 50) = Cell::Occupied;  // cell starting 2.95 m from the center
    const RayHit h = cast_ray(g, ox, oy, 0.0, 50.0);
    REQUIRE(h.hit);
    REQUIRE(h.range == Catch::Approx(3.0).margin(0.05));
}

TEST_CASE("all-free grid: short max_range gives a miss") {
    OccupancyGrid g(50, 50, 0.1);
    const RayHit h = cast_ray(g, g.center_x(25), g.center_y(25), 0.7, 1.0);
    REQUIRE_FALSE(h.hit);
}

TEST_CASE("ray leaving the grid gives a miss") {
    OccupancyGrid g(50, 50, 0.1);
    const RayHit h = cast_ray(g, g.center_x(25), g.center_y(25), 0.7, 100.0);
    REQUIRE_FALSE(h.hit);
}

TEST_CASE("origin errors") {
    OccupancyGrid g(10, 10, 0.1);
    g.at(3, 3) = Cell::Occupied;
    REQUIRE_THROWS_AS(cast_ray(g, g.center_x(3), g.center_y(3), 0.0, 1.0), OriginOccupied);
    REQUIRE_THROWS_AS(cast_ray(g, -5.0, 0.5, 0.0, 1.0), OriginOutside);
    REQUIRE_THROWS_AS(cast_ray(g, 0.5, 55.0, 0.0, 1.0), OriginOutside);
}

TEST_CASE("start on a grid line: tie-break toward motion") {
    OccupancyGrid g(10, 10, 1.0);
    g.at(4, 5) = Cell::Occupied;
    // origin exactly on the line between cells (4,5) and (5,5)
    const double ox = 5.0, oy = 5.5;
    // moving left: belongs to cell 4, which is occupied
    REQUIRE_THROWS_AS(cast_ray(g, ox, oy, kPi, 2.0), OriginOccupied);
    // moving right: belongs to cell 5, free; first wall going right does not exist
    REQUIRE_FALSE(cast_ray(g, ox, oy, 0.0, 2.0).hit);
}

TEST_CASE("DDA agrees with a fine-step marching oracle", "[oracle]") {
    const StableRng rng(2024, 7);
    const double max_range = 6.0;
    int checked = 0;
    for (int q = 0; q < 1000; ++q) {
        const auto g = oracles::random_grid(500 + q / 20, 50, 0.1, 0.12);
        const std::uint64_t c = static_cast<std::uint64_t>(q) * 8;
        const int i = 1 + static_cast<int>(rng.below(c + 0, 48));
        const int j = 1 + static_cast<int>(rng.below(c + 1, 48));
        if (g.occupied(i, j)) continue;
        const double ox = g.origin_x + (i + rng.uniform(c + 2, 0.1, 0.9)) * g.resolution;
        const double oy = g.origin_y + (j + rng.uniform(c + 3, 0.1, 0.9)) * g.resolution;
        const double angle = rng.uniform(c + 4, -kPi, kPi);

        const RayHit dda = cast_ray(g, ox, oy, angle, max_range);
        const auto marched = oracles::march_ray(g, ox, oy, angle, max_range, 1e-3 * g.resolution);
        const double diagonal = g.resolution * std::numbers::sqrt2;
        if (dda.hit) {
            REQUIRE(marched.has_value());
            REQUIRE(std::abs(dda.range - *marched) <= diagonal);
        } else {
            REQUIRE_FALSE(marched.has_value());
        }
        ++checked;
    }
    REQUIRE(checked > 800);  // occupied starts are skipped
}

TEST_CASE("monotone in max_range") {
    const auto g = oracles::random_grid(11, 40, 0.1, 0.15);
    const StableRng rng(3, 1);
    for (int q = 0; q < 200; ++q) {
        const int i = 1 + static_cast<int>(rng.below(q * 4 + 0, 38));
        const int j = 1 + static_cast<int>(rng.below(q * 4 + 1, 38));
        if (g.occupied(i, j)) continue;
        const double angle = rng.uniform(q * 4 + 2, -kPi, kPi);
        const RayHit near = cast_ray(g, g.center_x(i), g.center_y(j), angle, 2.0);
        if (!near.hit) continue;
        const RayHit far = cast_ray(g, g.center_x(i), g.center_y(j), angle, 8.0);
        REQUIRE(far.hit);
        REQUIRE(far.range == near.range);
    }
}

TEST_CASE("world-frame consistency under origin translation") {
    auto g = oracles::random_grid(21, 40, 0.125, 0.15);
    OccupancyGrid shifted = g;
    shifted.origin_x += 32.0;  // dyadic shift keeps cell centers bit-exact
    shifted.origin_y -= 16.0;
    const StableRng rng(4, 1);
    for (int q = 0; q < 200; ++q) {
        const int i = 1 + static_cast<int>(rng.below(q * 4 + 0, 38));
        const int j = 1 + static_cast<int>(rng.below(q * 4 + 1, 38));
        if (g.occupied(i, j)) continue;
        const double angle = rng.uniform(q * 4 + 2, -kPi, kPi);
        const RayHit a = cast_ray(g, g.center_x(i), g.center_y(j), angle, 5.0);
        const RayHit b = cast_ray(shifted, shifted.center_x(i), shifted.center_y(j), angle, 5.0);
        REQUIRE(a.hit == b.hit);
        if (a.hit) REQUIRE(a.range == b.range);
    }
}

TEST_CASE("hit range is bounded below by the nearest occupied center") {
    const auto g = oracles::random_grid(31, 40, 0.1, 0.1);
    const double diagonal = g.resolution * std::numbers::sqrt2;
    const StableRng rng(5, 1);
    for (int q = 0; q < 100; ++q) {
        const int i = 1 + static_cast<int>(rng.below(q * 4 + 0, 38));
        const int j = 1 + static_cast<int>(rng.below(q * 4 + 1, 38));
        if (g.occupied(i, j)) continue;
        double nearest = 1e9;
        for (int jj = 0; jj < g.height; ++jj)
            for (int ii = 0; ii < g.width; ++ii)
                if (g.occupied(ii, jj))
                    nearest = std::min(nearest, std::hypot(g.center_x(ii) - g.center_x(i),
                                                           g.center_y(jj) - g.center_y(j)));
        const RayHit h = cast_ray(g, g.center_x(i), g.center_y(j), rng.uniform(q * 4 + 2, -kPi, kPi), 10.0);
        if (h.hit) REQUIRE(h.range >= nearest - diagonal);
    }
}

TEST_CASE("floorplan_depth projects ranges onto the optical axis") {
    SECTION("zero offset keeps the range") {
        OccupancyGrid g(100, 100, 0.1);
        for (int j = 0; j < 100; ++j) g.at(70, j) = Cell::Occupied;  // wall at x = 7.0
        const Pose2 pose{g.center_x(50), g.center_y(50), 0.0};
        const auto d = floorplan_depth(g, pose, {0.0}, 50.0);
        REQUIRE(d[0].has_value());
        REQUIRE(*d[0] == Catch::Approx(7.0 - pose.x).margin(0.01));
    }
    SECTION("flat wall: depth equals the perpendicular distance for every ray") {
        OccupancyGrid g(200, 200, 0.05);
        for (int j = 0; j < 200; ++j) g.at(160, j) = Cell::Occupied;  // wall at x = 8.0
        const Pose2 pose{g.center_x(40), g.center_y(100), 0.0};
        const double wall_x = g.origin_x + 160 * g.resolution;
        const double expected = wall_x - pose.x;
        const auto d = floorplan_depth(g, pose, {-1.0, -0.5, -0.2, 0.0, 0.3, 0.9}, 50.0);
        for (const auto& v : d) {
            REQUIRE(v.has_value());
            // discretization error grows with obliquity: one cell along the ray
            REQUIRE(*v == Catch::Approx(expected).margin(g.resolution * 1.5));
        }
    }
    SECTION("cos scaling: alpha = pi/3 halves a 2 m range") {
        OccupancyGrid g(100, 100, 0.1);
        const Pose2 pose{g.center_x(50), g.center_y(50), 0.0};
        const double a = kPi / 3;
        // place a wall cell 2 m along the ray direction
        const int wi = g.cell_x(pose.x + 2.02 * std::cos(a));
        const int wj = g.cell_y(pose.y + 2.02 * std::sin(a));
        g.at(wi, wj) = Cell::Occupied;
        const auto d = floorplan_depth(g, pose, {a}, 50.0);
        REQUIRE(d[0].has_value());
        REQUIRE(*d[0] == Catch::Approx(2.0 * 0.5).margin(0.1));
    }
    SECTION("misses map to empty") {
        OccupancyGrid g(50, 50, 0.1);  // open boundary, every ray leaves
        const auto d = floorplan_depth(g, {2.5, 2.5, 0.0}, {-0.3, 0.0, 0.3}, 50.0);
        for (const auto& v : d) REQUIRE_FALSE(v.has_value());
    }
}

TEST_CASE("mirrored grid with mirrored ray angles gives the mirrored depths") {
    const auto g = oracles::random_grid(77, 40, 0.1, 0.15);
    OccupancyGrid mirrored = g;  // flip left-right
    for (int j = 0; j < g.height; ++j)
        for (int i = 0; i < g.width; ++i) mirrored.at(i, j) = g.at(g.width - 1 - i, j);

    const int ci = 12, cj = 20;
    REQUIRE_FALSE(g.occupied(ci, cj));
    const Pose2 pose{g.center_x(ci), g.center_y(cj), 0.0};
    // mirrored pose faces -x, i.e. phi = pi
    const Pose2 mpose{mirrored.center_x(g.width - 1 - ci), mirrored.center_y(cj), kPi};

    const std::vector<double> angles{-0.8, -0.3, 0.0, 0.4, 1.1};
    std::vector<double> neg_angles;
    for (double a : angles) neg_angles.push_back(-a);

    const auto d = floorplan_depth(g, pose, angles, 8.0);
    const auto dm = floorplan_depth(mirrored, mpose, neg_angles, 8.0);
    for (std::size_t k = 0; k < angles.size(); ++k) {
        REQUIRE(d[k].has_value() == dm[k].has_value());
        if (d[k]) REQUIRE(*d[k] == Catch::Approx(*dm[k]).margin(1e-9));
    }
}
