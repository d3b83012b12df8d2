#pragma once

#include <vector>

#include "camrl/crowdsim.hpp"

namespace camrl::sim {

struct SfmParams {
    double tau_relax = 0.5;   // relaxation time of the goal-attraction term (s)
    double repulsion_a = 2.0; // repulsion strength (m/s^2)
    double repulsion_b = 0.3; // repulsion range (m)
    double max_speed = 1.0;   // m/s
    double dt = 0.25;
};

// Goal attraction plus exponential interpersonal repulsion, Euler-integrated
// and clipped to max speed. `fallback` supplies the repulsion direction when
// two agents coincide exactly.
Vec2 sfm_policy(const FullAgentState& self, const std::vector<ObservableState>& neighbors,
                const SfmParams& params, Rng& fallback);

}  // namespace camrl::sim
