#include <catch2/catch_amalgamated.hpp>

#include "floorloc/metrics.hpp"

using namespace floorloc;

namespace {
std::vector<Pose2> poses_with_errors(const std::vector<double>& errors) {
    std::vector<Pose2> p;
    for (double e : errors) p.push_back({e, 0.0, 0.0});
    return p;
}
std::vector<Pose2> zeros(std::size_t n) { return std::vector<Pose2>(n, Pose2{}); }
}  // namespace

TEST_CASE("sequence_success") {
    SECTION("exact estimates succeed at any positive threshold") {
        const auto gt = zeros(12);
        REQUIRE(sequence_success(gt, gt, 1e-9));
    }
    SECTION("a single violation in the window fails") {
        std::vector<double> errors(15, 0.2);
        errors[9] = 1.0 + 1e-9;  // inside the last-10 window
        REQUIRE_FALSE(sequence_success(poses_with_errors(errors), zeros(15), 1.0));
        errors[9] = 1.0;  // "within" reads as <=
        REQUIRE(sequence_success(poses_with_errors(errors), zeros(15), 1.0));
    }
    SECTION("only the last window frames matter") {
        std::vector<double> errors(20, 2.0);
        for (int t = 10; t < 20; ++t) errors[t] = 0.5;
        REQUIRE(sequence_success(poses_with_errors(errors), zeros(20), 1.0));
    }
    SECTION("short sequences are rejected") {
        REQUIRE_THROWS_AS(sequence_success(zeros(5), zeros(5), 1.0), TooShort);
        REQUIRE_THROWS_AS(sequence_success(zeros(5), zeros(6), 1.0), LengthMismatch);
    }
}

TEST_CASE("rmse_window") {
    SECTION("exact estimates score zero") { REQUIRE(rmse_window(zeros(10), zeros(10)) == 0.0); }
    SECTION("constant error is returned unchanged") {
        REQUIRE(rmse_window(poses_with_errors(std::vector<double>(10, 0.7)), zeros(10)) ==
                Catch::Approx(0.7));
    }
    SECTION("errors 3 and 4 over a window of two") {
        REQUIRE(rmse_window(poses_with_errors({3.0, 4.0}), zeros(2), 2) ==
                Catch::Approx(std::sqrt(12.5)));
    }
    SECTION("too short throws") { REQUIRE_THROWS_AS(rmse_window(zeros(3), zeros(3)), TooShort); }
}

TEST_CASE("single_frame_recall") {
    SECTION("exact results hit every threshold") {
        std::vector<std::pair<Pose2, Pose2>> results(5, {Pose2{}, Pose2{}});
        const auto recall = single_frame_recall(results, default_recall_thresholds());
        for (double r : recall) REQUIRE(r == 1.0);
    }
    SECTION("joint threshold needs both position and heading") {
        // 0.7 m position error, 45 degree heading error
        const std::vector<std::pair<Pose2, Pose2>> results{
            {Pose2{0.7, 0.0, kPi / 4}, Pose2{0.0, 0.0, 0.0}}};
        const std::vector<RecallThreshold> ths{RecallThreshold::distance(1.0),
                                               RecallThreshold::joint(1.0, 30.0)};
        const auto recall = single_frame_recall(results, ths);
        REQUIRE(recall[0] == 1.0);
        REQUIRE(recall[1] == 0.0);
    }
    SECTION("hand-counted mixed batch") {
        const std::vector<std::pair<Pose2, Pose2>> results{
            {Pose2{0.05, 0.0, 0.0}, Pose2{}},         // within everything
            {Pose2{0.0, 0.4, 0.1}, Pose2{}},          // within 0.5m, 1m, 1m30deg
            {Pose2{0.9, 0.0, 2.0}, Pose2{}},          // within 1m but heading off
            {Pose2{4.0, 3.0, 0.0}, Pose2{}},          // 5 m out
        };
        const auto recall = single_frame_recall(results, default_recall_thresholds());
        REQUIRE(recall[0] == Catch::Approx(0.25));  // 0.1m
        REQUIRE(recall[1] == Catch::Approx(0.50));  // 0.5m
        REQUIRE(recall[2] == Catch::Approx(0.75));  // 1m
        REQUIRE(recall[3] == Catch::Approx(0.50));  // 1m 30deg
        REQUIRE(recall[4] == Catch::Approx(0.75));  // 2m
        REQUIRE(recall[5] == Catch::Approx(1.0));   // 5m
    }
    SECTION("empty input gives zero recall") {
        const auto recall = single_frame_recall({}, default_recall_thresholds());
        for (double r : recall) REQUIRE(r == 0.0);
    }
    SECTION("recall is monotone in the distance threshold") {
        std::vector<std::pair<Pose2, Pose2>> results;
        for (int q = 0; q < 50; ++q)
            results.push_back({Pose2{0.11 * q, 0.07 * q, 0.0}, Pose2{}});
        std::vector<RecallThreshold> ths;
        for (double d = 0.1; d < 8.0; d *= 1.7) ths.push_back(RecallThreshold::distance(d));
        const auto recall = single_frame_recall(results, ths);
        for (std::size_t t = 1; t < recall.size(); ++t) REQUIRE(recall[t] >= recall[t - 1]);
    }
}

TEST_CASE("heading error wraps into [0, pi]") {
    REQUIRE(heading_error({0, 0, 3.0}, {0, 0, -3.0}) == Catch::Approx(2 * kPi - 6.0));
    REQUIRE(heading_error({0, 0, 0.2}, {0, 0, -0.2}) == Catch::Approx(0.4));
    REQUIRE(heading_error({0, 0, kPi - 0.01}, {0, 0, -kPi + 0.01}) == Catch::Approx(0.02).margin(1e-12));
}
