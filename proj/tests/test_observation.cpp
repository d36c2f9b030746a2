#include <catch2/catch_amalgamated.hpp>

#include "floorloc/observation.hpp"
#include "floorloc/rng.hpp"

using namespace floorloc;

TEST_CASE("column_angle") {
    SECTION("principal column has zero bearing") {
        const CameraModel cam(100.0, 100.0, 50.5, 40.0, 100, 80);
        REQUIRE(column_angle(cam, 50) == 0.0);  // 50 + 0.5 - 50.5
    }
    SECTION("edge column is within half a column of the FoV edge") {
        const CameraModel cam(90.0, 90.0, 60.0, 40.0, 120, 80);
        const double half_fov = cam.hfov() / 2.0;
        const double edge = column_angle(cam, 119);
        const double half_column = half_fov - std::atan((119.0 - cam.cx) / cam.fx);
        REQUIRE(edge <= half_fov);
        REQUIRE(edge >= half_fov - 2.0 * half_column);
    }
    SECTION("direct evaluation: atan(0.995)") {
        const CameraModel cam(100.0, 100.0, 50.0, 50.0, 200, 100);
        REQUIRE(column_angle(cam, 149) == Catch::Approx(0.78315).margin(5e-6));
    }
    SECTION("strictly increasing in u") {
        const CameraModel cam(55.0, 55.0, 31.0, 24.0, 64, 48);
        for (int u = 1; u < cam.width; ++u)
            REQUIRE(column_angle(cam, u) > column_angle(cam, u - 1));
    }
}

TEST_CASE("ColumnPrediction floors scales on ingestion") {
    const CameraModel cam(100.0, 100.0, 2.0, 2.0, 4, 4);
    const ColumnPrediction pred({1.0, 2.0, 3.0, 4.0}, {0.0, 1e-9, 0.5, -3.0}, cam);
    REQUIRE(pred.scales[0] == kMinScale);
    REQUIRE(pred.scales[1] == kMinScale);
    REQUIRE(pred.scales[2] == 0.5);
    REQUIRE(pred.scales[3] == kMinScale);
    REQUIRE_THROWS_AS(ColumnPrediction({1.0}, {1.0, 2.0}, cam), LengthMismatch);
}

TEST_CASE("resample_to_rays") {
    const CameraModel cam = CameraModel::from_hfov(1.2, 64, 48);

    SECTION("constant depths resample to the constant") {
        std::vector<double> depths(64, 3.25), scales(64, 0.2);
        const auto obs = resample_to_rays(ColumnPrediction(depths, scales, cam), 11);
        REQUIRE(obs.size() == 11);
        for (int j = 0; j < obs.size(); ++j) {
            REQUIRE(obs.valid[j] == 1);
            REQUIRE(obs.depths[j] == Catch::Approx(3.25).margin(1e-12));
            REQUIRE(obs.scales[j] == Catch::Approx(0.2).margin(1e-12));
        }
    }
    SECTION("single ray sits on the optical axis") {
        std::vector<double> depths(64), scales(64, 0.1);
        for (int u = 0; u < 64; ++u) depths[u] = 1.0 + 0.05 * u;
        const auto obs = resample_to_rays(ColumnPrediction(depths, scales, cam), 1);
        REQUIRE(obs.size() == 1);
        REQUIRE(obs.ray_angles[0] == 0.0);
        REQUIRE(obs.valid[0] == 1);
        // interpolated between the two columns bracketing bearing 0
        REQUIRE(obs.depths[0] > depths[31]);
        REQUIRE(obs.depths[0] < depths[32]);
    }
    SECTION("four columns, three rays: matches hand interpolation") {
        const CameraModel tiny(2.0, 2.0, 2.0, 2.0, 4, 4);
        const std::vector<double> depths{1.0, 2.0, 3.0, 4.0};
        const std::vector<double> scales{0.1, 0.2, 0.3, 0.4};
        const auto obs = resample_to_rays(ColumnPrediction(depths, scales, tiny), 3);

        // column bearings: atan((u + 0.5 - 2) / 2)
        std::vector<double> bearing(4);
        for (int u = 0; u < 4; ++u) bearing[u] = std::atan((u + 0.5 - 2.0) / 2.0);
        const double fov = 2.0 * std::atan(1.0);
        for (int j = 0; j < 3; ++j) {
            const double a = -fov / 2.0 + (j + 0.5) * fov / 3.0;
            REQUIRE(obs.ray_angles[j] == Catch::Approx(a).margin(1e-15));
            // locate bracketing columns by hand
            int lo = 0;
            while (lo + 2 < 4 && bearing[lo + 1] <= a) ++lo;
            const double w = (a - bearing[lo]) / (bearing[lo + 1] - bearing[lo]);
            REQUIRE(obs.valid[j] == 1);
            REQUIRE(obs.depths[j] ==
                    Catch::Approx(depths[lo] + w * (depths[lo + 1] - depths[lo])).margin(1e-12));
            REQUIRE(obs.scales[j] ==
                    Catch::Approx(scales[lo] + w * (scales[lo + 1] - scales[lo])).margin(1e-12));
        }
    }
    SECTION("rays outside the covered bearings are invalid") {
        // n_rays much larger than columns: the outermost rays fall outside the
        // first/last column centers
        const CameraModel tiny(2.0, 2.0, 2.0, 2.0, 4, 4);
        const auto obs = resample_to_rays(
            ColumnPrediction({1, 2, 3, 4}, {1, 1, 1, 1}, tiny), 64);
        REQUIRE(obs.valid.front() == 0);
        REQUIRE(obs.valid.back() == 0);
        REQUIRE(obs.valid_count() > 32);
    }
}

TEST_CASE("laplace_nll") {
    const CameraModel cam(10.0, 10.0, 2.0, 2.0, 4, 4);
    SECTION("perfect prediction with unit scales scores zero") {
        const ColumnPrediction pred({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0},
                                    CameraModel(10, 10, 1.5, 1.5, 3, 3));
        REQUIRE(laplace_nll(pred, {1.0, 2.0, 3.0}) == 0.0);
    }
    SECTION("perfect prediction with scale e scores one per column") {
        const double e = std::exp(1.0);
        const ColumnPrediction pred({1.0, 2.0, 3.0, 4.0}, {e, e, e, e}, cam);
        REQUIRE(laplace_nll(pred, {1.0, 2.0, 3.0, 4.0}) == Catch::Approx(4.0).margin(1e-12));
    }
    SECTION("length mismatch throws") {
        const ColumnPrediction pred({1.0, 2.0, 3.0, 4.0}, {1, 1, 1, 1}, cam);
        REQUIRE_THROWS_AS(laplace_nll(pred, {1.0}), LengthMismatch);
    }
}

TEST_CASE("NLL-minimizing constant scale equals the mean absolute residual", "[oracle]") {
    // Laplace-distributed residuals; grid search over the constant scale
    const StableRng rng(424242, 0);
    const double true_scale = 0.7;
    const int n = 100000;
    std::vector<double> residual(n);
    double mean_abs = 0.0;
    for (int i = 0; i < n; ++i) {
        residual[i] = rng.laplace(static_cast<std::uint64_t>(i), true_scale);
        mean_abs += std::abs(residual[i]);
    }
    mean_abs /= n;

    double best_b = 0.0, best_nll = 1e300;
    for (double b = 0.3; b <= 1.2; b += 0.0005) {
        double nll = 0.0;
        for (int i = 0; i < n; ++i) nll += std::log(b) + std::abs(residual[i]) / b;
        if (nll < best_nll) {
            best_nll = nll;
            best_b = b;
        }
    }
    REQUIRE(best_b == Catch::Approx(mean_abs).epsilon(0.01));
    REQUIRE(mean_abs == Catch::Approx(true_scale).epsilon(0.02));  // MAD of Laplace = scale
}
