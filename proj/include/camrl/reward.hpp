#pragma once

namespace camrl::reward {

struct RewardConfig {
    double discomfort_radius = 0.2;    // r_c (m)
    double collision_penalty = -0.25;
    double goal_reward = 1.0;
    double timeout_penalty = -0.5;
    double dt = 0.25;                  // s
    double episode_limit = 25.0;       // s
};

// Piecewise reward, evaluated in the written case order:
//   -0.25                     if d_t <= 0
//   (d_t - r_c) * dt / 2      else if d_t < r_c
//   1                         else if at goal
//   -0.5                      else if t >= episode limit
//   0                         otherwise
double compute_reward(double separation, bool at_goal, double t, const RewardConfig& cfg);

}  // namespace camrl::reward
