#pragma once

#include <vector>

#include "camrl/crowdsim.hpp"

namespace camrl::sim {

struct OrcaParams {
    double time_horizon = 5.0;    // tau (s)
    double neighbor_range = 10.0; // m
    double max_speed = 1.0;       // m/s
    double dt = 0.25;             // used for the already-colliding cone
    double safety_margin = 0.0;   // radius inflation (m)
};

// Velocity closest to the preferred velocity subject to one reciprocal
// half-plane constraint per neighbor and the speed cap. Infeasible programs
// fall back to the least-violating solution (3D-lifted LP).
Vec2 orca_policy(const FullAgentState& self, const std::vector<ObservableState>& neighbors,
                 const OrcaParams& params);

}  // namespace camrl::sim
