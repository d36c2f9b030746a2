#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "floorloc/grid.hpp"

namespace floorloc {

inline double position_error(const Pose2& est, const Pose2& gt) {
    return std::hypot(est.x - gt.x, est.y - gt.y);
}

/// Absolute heading error wrapped into [0, pi].
inline double heading_error(const Pose2& est, const Pose2& gt) {
    return std::abs(wrap_angle(est.phi - gt.phi));
}

/// A sequence is successful at a threshold when the position error stays
/// within it ("within" read as <=) over every one of the last `window` frames.
inline bool sequence_success(const std::vector<Pose2>& est, const std::vector<Pose2>& gt,
                             double threshold_m, int window = 10) {
    if (est.size() != gt.size()) throw LengthMismatch("estimate and ground-truth pose counts differ");
    if (static_cast<int>(est.size()) < window)
        throw TooShort("need at least " + std::to_string(window) + " frames");
    for (std::size_t t = est.size() - window; t < est.size(); ++t)
        if (position_error(est[t], gt[t]) > threshold_m) return false;
    return true;
}

/// Root-mean-square position error over the last `window` frames.
inline double rmse_window(const std::vector<Pose2>& est, const std::vector<Pose2>& gt,
                          int window = 10) {
    if (est.size() != gt.size()) throw LengthMismatch("estimate and ground-truth pose counts differ");
    if (static_cast<int>(est.size()) < window)
        throw TooShort("need at least " + std::to_string(window) + " frames");
    double sq = 0.0;
    for (std::size_t t = est.size() - window; t < est.size(); ++t) {
        const double e = position_error(est[t], gt[t]);
        sq += e * e;
    }
    return std::sqrt(sq / window);
}

/// One recall threshold: distance only, or distance plus heading.
struct RecallThreshold {
    double distance_m = 0.0;
    double heading_deg = 0.0;  // 0 = position-only
    bool with_heading = false;

    static RecallThreshold distance(double d) { return {d, 0.0, false}; }
    static RecallThreshold joint(double d, double deg) { return {d, deg, true}; }

    std::string label() const {
        auto fmt = [](double v) {
            std::string s = std::to_string(v);
            s.erase(s.find_last_not_of('0') + 1);
            if (!s.empty() && s.back() == '.') s.pop_back();
            return s;
        };
        std::string out = fmt(distance_m) + "m";
        if (with_heading) out += " " + fmt(heading_deg) + "deg";
        return out;
    }
};

/// Fraction of (estimate, ground truth) pairs within each threshold.
inline std::vector<double> single_frame_recall(
    const std::vector<std::pair<Pose2, Pose2>>& results,
    const std::vector<RecallThreshold>& thresholds) {
    std::vector<double> recall(thresholds.size(), 0.0);
    if (results.empty()) return recall;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        const RecallThreshold& th = thresholds[t];
        int hits = 0;
        for (const auto& [est, gt] : results) {
            if (position_error(est, gt) > th.distance_m) continue;
            if (th.with_heading && heading_error(est, gt) > th.heading_deg * kPi / 180.0) continue;
            ++hits;
        }
        recall[t] = static_cast<double>(hits) / results.size();
    }
    return recall;
}

/// The paper-style threshold ladder: 0.1m, 0.5m, 1m, 1m 30deg, 2m, 5m, 10m.
inline std::vector<RecallThreshold> default_recall_thresholds() {
    return {RecallThreshold::distance(0.1), RecallThreshold::distance(0.5),
            RecallThreshold::distance(1.0), RecallThreshold::joint(1.0, 30.0),
            RecallThreshold::distance(2.0), RecallThreshold::distance(5.0),
            RecallThreshold::distance(10.0)};
}

}  // namespace floorloc
