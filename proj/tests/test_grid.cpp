#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "floorloc/grid.hpp"
#include "floorloc/io.hpp"

using namespace floorloc;

namespace {
OccupancyGrid from_json_text(const std::string& text) {
    return grid_from_json(nlohmann::json::parse(text), "<test>");
}
}  // namespace

TEST_CASE("json-grid: 2x2 all free") {
    const auto g = from_json_text(R"({"format_version":1,"resolution":0.5,"origin":[1.0,2.0],
                                      "rows":["..",".."]})");
    REQUIRE(g.width == 2);
    REQUIRE(g.height == 2);
    REQUIRE(g.count_free() == 4);
    REQUIRE(g.resolution == 0.5);
    REQUIRE(g.origin_x == 1.0);
    REQUIRE(g.origin_y == 2.0);
}

TEST_CASE("json-grid: row 0 is the lowest y") {
    const auto g = from_json_text(R"({"format_version":1,"resolution":1.0,
                                      "rows":["##",".."]})");
    REQUIRE(g.occupied(0, 0));
    REQUIRE(g.occupied(1, 0));
    REQUIRE_FALSE(g.occupied(0, 1));
}

TEST_CASE("json-grid: errors") {
    REQUIRE_THROWS_AS(from_json_text(R"({"resolution":0.1,"rows":[".."]})"), MalformedFile);
    REQUIRE_THROWS_AS(from_json_text(R"({"format_version":1,"resolution":0.1,"rows":["..","."]})"),
                      InconsistentDims);
    REQUIRE_THROWS_AS(from_json_text(R"({"format_version":1,"resolution":0.1,"rows":[]})"),
                      ZeroArea);
    REQUIRE_THROWS_AS(from_json_text(R"({"format_version":1,"resolution":0.1,"rows":[".x"]})"),
                      MalformedFile);
    REQUIRE_THROWS_AS(from_json_text(R"({"format_version":1,"resolution":-1.0,"rows":[".."]})"),
                      MalformedFile);
}

TEST_CASE("pgm: threshold at 128, top row is highest y") {
    std::istringstream in("P2\n2 2\n255\n0 255\n255 0\n");
    const auto g = grid_from_pgm_stream(in, "<test>", 0.1, 0.0, 0.0);
    // file row 0 (top) = grid row 1
    REQUIRE(g.occupied(0, 1));
    REQUIRE_FALSE(g.occupied(1, 1));
    REQUIRE_FALSE(g.occupied(0, 0));
    REQUIRE(g.occupied(1, 0));
}

TEST_CASE("pgm: errors") {
    std::istringstream bad_magic("P5\n2 2\n255\n0 0 0 0\n");
    REQUIRE_THROWS_AS(grid_from_pgm_stream(bad_magic, "<t>", 0.1, 0, 0), MalformedFile);
    std::istringstream zero("P2\n0 2\n255\n");
    REQUIRE_THROWS_AS(grid_from_pgm_stream(zero, "<t>", 0.1, 0, 0), ZeroArea);
    std::istringstream short_payload("P2\n2 2\n255\n0 0 0\n");
    REQUIRE_THROWS_AS(grid_from_pgm_stream(short_payload, "<t>", 0.1, 0, 0), InconsistentDims);
}

TEST_CASE("resolution arithmetic: 300x300 at 0.1 m spans 30 m") {
    OccupancyGrid g(300, 300, 0.1);
    REQUIRE(g.extent_x() == Catch::Approx(30.0));
    REQUIRE(g.extent_y() == Catch::Approx(30.0));
}

TEST_CASE("world/grid mapping is a half-open bijection") {
    OccupancyGrid g(4, 3, 0.5, -1.0, 2.0);
    REQUIRE(g.cell_x(-1.0) == 0);
    REQUIRE(g.cell_x(-0.5) == 1);          // left edge belongs to the next cell
    REQUIRE(g.cell_x(-0.5 - 1e-12) == 0);  // just inside the previous one
    REQUIRE(g.cell_y(2.49) == 0);
    REQUIRE(g.center_x(0) == Catch::Approx(-0.75));
    REQUIRE(g.center_y(2) == Catch::Approx(3.25));
    REQUIRE(g.cell_x(g.center_x(3)) == 3);
    REQUIRE(g.cell_y(g.center_y(2)) == 2);
}

TEST_CASE("free_space_mask") {
    SECTION("all free") {
        OccupancyGrid g(3, 2, 1.0);
        const auto mask = free_space_mask(g);
        REQUIRE(std::count(mask.begin(), mask.end(), true) == 6);
    }
    SECTION("all occupied") {
        OccupancyGrid g(3, 2, 1.0, 0, 0, Cell::Occupied);
        const auto mask = free_space_mask(g);
        REQUIRE(std::count(mask.begin(), mask.end(), true) == 0);
    }
    SECTION("mixed equals cell-by-cell comparison") {
        OccupancyGrid g(3, 3, 1.0);
        g.at(1, 1) = Cell::Occupied;
        g.at(2, 0) = Cell::Occupied;
        const auto mask = free_space_mask(g);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i)
                REQUIRE(mask[j * 3 + i] == !g.occupied(i, j));
    }
}

TEST_CASE("grid round-trips through json and pgm files") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "floorloc_grid_test";
    fs::create_directories(dir);

    OccupancyGrid g(7, 5, 0.25, -2.0, 3.5);
    g.at(2, 3) = Cell::Occupied;
    g.at(6, 0) = Cell::Occupied;

    SECTION("json") {
        const auto path = (dir / "g.json").string();
        save_grid(g, path);
        const auto back = load_grid(path, GridFormat::JsonGrid);
        REQUIRE(back.cells == g.cells);
        REQUIRE(back.resolution == g.resolution);
        REQUIRE(back.origin_x == g.origin_x);
    }
    SECTION("pgm with sidecar metadata") {
        const auto path = (dir / "g.pgm").string();
        save_grid(g, path);
        const auto back = load_grid(path, GridFormat::PgmAscii);
        REQUIRE(back.cells == g.cells);
        REQUIRE(back.resolution == g.resolution);
        REQUIRE(back.origin_y == g.origin_y);
    }
}

TEST_CASE("wrap_angle lands in [-pi, pi)") {
    REQUIRE(wrap_angle(kPi) == -kPi);
    REQUIRE(wrap_angle(-kPi) == -kPi);
    REQUIRE(wrap_angle(3 * kPi) == Catch::Approx(-kPi));
    REQUIRE(wrap_angle(0.5) == 0.5);
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = wrap_angle(a);
        REQUIRE(w >= -kPi);
        REQUIRE(w < kPi);
        REQUIRE(std::abs(std::remainder(w - a, kTwoPi)) < 1e-12);
    }
}

TEST_CASE("theta_bin_center: middle bin of an even count is exactly zero") {
    REQUIRE(theta_bin_center(18, 36) == 0.0);
    REQUIRE(theta_bin_center(0, 36) == -kPi);
    REQUIRE(theta_bin_center(2, 4) == 0.0);
    REQUIRE(theta_bin_center(27, 36) == Catch::Approx(kPi / 2));
}
