#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "camrl/rng.hpp"
#include "camrl/vec2.hpp"

namespace camrl::reward {
struct RewardConfig;
}

namespace camrl::sim {

// Everything another agent can sense about an agent.
struct ObservableState {
    Vec2 p;          // position (m)
    Vec2 v;          // velocity (m/s)
    double r = 0.3;  // bounding radius (m)
};

// An agent's intention, hidden from the robot.
struct HiddenState {
    Vec2 goal;
    double v_pref = 1.0;  // preferred speed (m/s)
};

struct FullAgentState {
    ObservableState obs;
    HiddenState hidden;
};

// Robot full state plus all humans' observable states at one instant.
struct JointState {
    FullAgentState robot;
    std::vector<ObservableState> humans;
};

enum class CrowdModel { Orca, Sfm };
enum class ScenarioShape { Circle, Square };
enum class ScenarioScale { Baseline, Dense, Large };

std::string crowd_model_name(CrowdModel m);
CrowdModel crowd_model_from_name(const std::string& s);
std::string scenario_name(ScenarioShape shape, ScenarioScale scale);

struct ScenarioConfig {
    ScenarioShape shape = ScenarioShape::Circle;
    ScenarioScale scale = ScenarioScale::Baseline;
    double geometry = 4.0;  // circle radius / square width (m)
    int human_count = 5;
    CrowdModel crowd_model = CrowdModel::Orca;
    std::uint64_t seed = 0;

    // Fills geometry and human count from the fixed scenario table:
    // circle baseline (4 m, 5), dense (4 m, 10), large (6 m, 12);
    // square baseline (10 m, 10), dense (10 m, 20), large (14 m, 20).
    static ScenarioConfig make(ScenarioShape shape, ScenarioScale scale, CrowdModel model,
                               std::uint64_t seed);
    static ScenarioConfig from_name(const std::string& env_name, CrowdModel model,
                                    std::uint64_t seed);
    std::string name() const { return scenario_name(shape, scale); }
};

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimParams {
    double dt = 0.25;             // simulation step (s)
    double time_limit = 25.0;     // episode limit (s)
    double agent_radius = 0.3;    // humans and robot alike
    double v_pref = 1.0;          // preferred speed for all agents
    double goal_tolerance = 0.3;  // success radius = robot radius
    // ORCA
    double orca_time_horizon = 5.0;
    double orca_neighbor_range = 10.0;
    // SFM
    double sfm_tau_relax = 0.5;
    double sfm_repulsion_a = 2.0;
    double sfm_repulsion_b = 0.3;
};

struct World {
    FullAgentState robot;
    std::vector<FullAgentState> humans;
    std::vector<bool> human_done;  // humans hold position once they reach their goal
    CrowdModel crowd_model = CrowdModel::Orca;
    double time = 0.0;
    std::uint64_t seed = 0;  // scenario seed, kept for the SFM coincidence fallback stream
    std::uint64_t fallback_counter = 0;
};

// Seeded scenario generator. Deterministic given cfg (including seed); throws
// GenerationError when agents cannot be placed with the required clearance.
World spawn_scenario(const ScenarioConfig& cfg, const SimParams& sp);

// min over humans of (dist - r_robot - r_human); +inf when no humans
double separation_distance(const ObservableState& robot, const std::vector<ObservableState>& humans);

enum class Termination { Running, Success, Collision, Timeout };
std::string termination_name(Termination t);

// Collision first, then success, then timeout.
Termination check_termination(const World& w, double t, double goal_tolerance, double time_limit);

struct StepEvents {
    double separation = 0.0;  // d_t on the post-step configuration
};

// Advances every agent once: humans act through the crowd model over
// neighbors excluding the robot (invisible robot), the robot applies the
// commanded velocity, all positions integrate p += dt*v.
StepEvents step(World& w, const Vec2& robot_action, const SimParams& sp);

JointState observe(const World& w);

// ---- episode running ----

class RobotPolicy {
public:
    virtual ~RobotPolicy() = default;
    virtual void reset() {}
    virtual Vec2 act(const JointState& s, double time) = 0;
    virtual std::string name() const = 0;
};

struct TrajectoryStep {
    double time = 0.0;  // post-step timestamp
    JointState state;   // post-step configuration
    Vec2 action;
    double reward = 0.0;
    double separation = 0.0;
};

struct EpisodeOutcome {
    Termination result = Termination::Running;
    double elapsed = 0.0;
    double cumulative_reward = 0.0;
    std::vector<TrajectoryStep> trajectory;
    std::vector<std::pair<double, double>> discomfort_events;  // (t, d_t) with 0 < d_t < r_c
    JointState initial_state;
};

EpisodeOutcome run_episode(const ScenarioConfig& cfg, const SimParams& sp,
                           const reward::RewardConfig& rc, RobotPolicy& policy);

// The reaction-based baseline: the robot runs ORCA against the observed
// humans (who never react back).
class OrcaRobotPolicy : public RobotPolicy {
public:
    explicit OrcaRobotPolicy(const SimParams& sp, double safety_margin = 0.0)
        : sp_(sp), safety_margin_(safety_margin) {}
    Vec2 act(const JointState& s, double time) override;
    std::string name() const override { return "orca"; }

private:
    SimParams sp_;
    double safety_margin_;
};

}  // namespace camrl::sim
