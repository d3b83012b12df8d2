#include "camrl/features.hpp"

#include <algorithm>
#include <cmath>

namespace camrl::rl {

StateFeatures transform_state(const sim::JointState& joint) {
    const auto& robot = joint.robot;
    Vec2 to_goal = robot.hidden.goal - robot.obs.p;
    double dg = to_goal.norm();
    double phi = (dg > 0.0) ? std::atan2(to_goal.y, to_goal.x) : 0.0;
    double c = std::cos(-phi), s = std::sin(-phi);
    auto rot = [&](const Vec2& v) { return Vec2(c * v.x - s * v.y, s * v.x + c * v.y); };

    StateFeatures out;
    Vec2 rv = rot(robot.obs.v);
    out.robot = {dg, robot.hidden.v_pref, rv.x, rv.y, robot.obs.r};
    out.humans.reserve(joint.humans.size());
    for (const auto& h : joint.humans) {
        Vec2 rel = rot(h.p - robot.obs.p);
        Vec2 hv = rot(h.v);
        double dist = rel.norm();
        out.humans.push_back({rel.x, rel.y, hv.x, hv.y, h.r, dist, h.r + robot.obs.r});
    }
    return out;
}

std::vector<std::vector<double>> sort_human_rows(std::vector<std::vector<double>> rows) {
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a[5] != b[5]) return a[5] > b[5];
        return a > b;  // lexicographic tie-break on content
    });
    return rows;
}

}  // namespace camrl::rl
