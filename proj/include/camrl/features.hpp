#pragma once

#include <vector>

#include "camrl/crowdsim.hpp"

namespace camrl::rl {

// Robot-centric canonicalization: world translated so the robot sits at the
// origin and rotated so its goal lies on +x. Velocities rotate with the frame.
// robot row: (dg, v_pref, vx, vy, r)
// human row: (px, py, vx, vy, r, dist_to_robot, r + r_robot)
inline constexpr std::size_t kRobotFeatureDim = 5;
inline constexpr std::size_t kHumanFeatureDim = 7;

struct StateFeatures {
    std::vector<double> robot;                // kRobotFeatureDim
    std::vector<std::vector<double>> humans;  // n x kHumanFeatureDim, input order
};

StateFeatures transform_state(const sim::JointState& joint);

// Rows ordered by decreasing distance to the robot so the nearest human is
// consumed last by a recurrent encoder. Ties break on row content, keeping
// the ordering invariant under input permutation.
std::vector<std::vector<double>> sort_human_rows(std::vector<std::vector<double>> rows);

}  // namespace camrl::rl
