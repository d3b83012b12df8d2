#include "camrl/reward.hpp"

namespace camrl::reward {

double compute_reward(double separation, bool at_goal, double t, const RewardConfig& cfg) {
    if (separation <= 0.0) return cfg.collision_penalty;
    if (separation < cfg.discomfort_radius) return (separation - cfg.discomfort_radius) * cfg.dt / 2.0;
    if (at_goal) return cfg.goal_reward;
    if (t >= cfg.episode_limit) return cfg.timeout_penalty;
    return 0.0;
}

}  // namespace camrl::reward
