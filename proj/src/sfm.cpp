#include "camrl/sfm.hpp"

#include <cmath>

namespace camrl::sim {

Vec2 sfm_policy(const FullAgentState& self, const std::vector<ObservableState>& neighbors,
                const SfmParams& params, Rng& fallback) {
    Vec2 to_goal = self.hidden.goal - self.obs.p;
    double dist = to_goal.norm();
    double desired_speed = std::min(self.hidden.v_pref, dist / params.dt);
    Vec2 v_des = to_goal.normalized() * desired_speed;
    Vec2 acc = (v_des - self.obs.v) / params.tau_relax;

    for (const ObservableState& other : neighbors) {
        Vec2 dvec = self.obs.p - other.p;
        double d = dvec.norm();
        double r_sum = self.obs.r + other.r;
        Vec2 dir = d > 0.0 ? dvec / d : fallback.unit_vector();
        acc += params.repulsion_a * std::exp((r_sum - d) / params.repulsion_b) * dir;
    }

    Vec2 v_new = self.obs.v + acc * params.dt;
    double speed = v_new.norm();
    if (speed > params.max_speed) v_new = v_new * (params.max_speed / speed);
    return v_new;
}

}  // namespace camrl::sim
