#include "camrl/crowdsim.hpp"

#include <cmath>
#include <limits>

#include "camrl/orca.hpp"
#include "camrl/reward.hpp"
#include "camrl/sfm.hpp"

namespace camrl::sim {

std::string crowd_model_name(CrowdModel m) { return m == CrowdModel::Orca ? "orca" : "sfm"; }

CrowdModel crowd_model_from_name(const std::string& s) {
    if (s == "orca") return CrowdModel::Orca;
    if (s == "sfm") return CrowdModel::Sfm;
    throw std::invalid_argument("unknown crowd model: " + s);
}

std::string scenario_name(ScenarioShape shape, ScenarioScale scale) {
    std::string prefix;
    switch (scale) {
        case ScenarioScale::Baseline: prefix = "baseline"; break;
        case ScenarioScale::Dense: prefix = "dense"; break;
        case ScenarioScale::Large: prefix = "large"; break;
    }
    return prefix + (shape == ScenarioShape::Circle ? "-circle" : "-square");
}

ScenarioConfig ScenarioConfig::make(ScenarioShape shape, ScenarioScale scale, CrowdModel model,
                                    std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.shape = shape;
    cfg.scale = scale;
    cfg.crowd_model = model;
    cfg.seed = seed;
    if (shape == ScenarioShape::Circle) {
        switch (scale) {
            case ScenarioScale::Baseline: cfg.geometry = 4.0; cfg.human_count = 5; break;
            case ScenarioScale::Dense: cfg.geometry = 4.0; cfg.human_count = 10; break;
            case ScenarioScale::Large: cfg.geometry = 6.0; cfg.human_count = 12; break;
        }
    } else {
        switch (scale) {
            case ScenarioScale::Baseline: cfg.geometry = 10.0; cfg.human_count = 10; break;
            case ScenarioScale::Dense: cfg.geometry = 10.0; cfg.human_count = 20; break;
            case ScenarioScale::Large: cfg.geometry = 14.0; cfg.human_count = 20; break;
        }
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::from_name(const std::string& env_name, CrowdModel model,
                                         std::uint64_t seed) {
    auto dash = env_name.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("bad environment name: " + env_name);
    std::string scale_s = env_name.substr(0, dash);
    std::string shape_s = env_name.substr(dash + 1);
    ScenarioScale scale;
    if (scale_s == "baseline") scale = ScenarioScale::Baseline;
    else if (scale_s == "dense") scale = ScenarioScale::Dense;
    else if (scale_s == "large") scale = ScenarioScale::Large;
    else throw std::invalid_argument("bad environment name: " + env_name);
    ScenarioShape shape;
    if (shape_s == "circle") shape = ScenarioShape::Circle;
    else if (shape_s == "square") shape = ScenarioShape::Square;
    else throw std::invalid_argument("bad environment name: " + env_name);
    return make(shape, scale, model, seed);
}

namespace {

constexpr double kPlacementMargin = 0.2;  // extra clearance at spawn (m)
constexpr int kMaxPlacementTries = 3000;

bool clear_of(const Vec2& p, const std::vector<Vec2>& others, double min_dist) {
    for (const Vec2& o : others) {
        if (distance(p, o) < min_dist) return false;
    }
    return true;
}

}  // namespace

World spawn_scenario(const ScenarioConfig& cfg, const SimParams& sp) {
    Rng rng = Rng::substream(cfg.seed, "scenario");
    World w;
    w.crowd_model = cfg.crowd_model;
    w.seed = cfg.seed;
    w.time = 0.0;

    double g = cfg.geometry;
    double half = (cfg.shape == ScenarioShape::Circle) ? g : g / 2.0;
    w.robot.obs = {Vec2(0.0, -half), Vec2(0.0, 0.0), sp.agent_radius};
    w.robot.hidden = {Vec2(0.0, half), sp.v_pref};

    double min_dist = 2.0 * sp.agent_radius + kPlacementMargin;
    std::vector<Vec2> starts{w.robot.obs.p, w.robot.hidden.goal};
    std::vector<Vec2> goals{w.robot.obs.p, w.robot.hidden.goal};

    for (int i = 0; i < cfg.human_count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementTries; ++attempt) {
            Vec2 start, goal;
            if (cfg.shape == ScenarioShape::Circle) {
                double theta = rng.uniform(0.0, 2.0 * M_PI);
                start = Vec2(g * std::cos(theta), g * std::sin(theta));
                double dtheta = rng.uniform(-0.15, 0.15);
                double dr = rng.uniform(-0.2, 0.2);
                goal = Vec2((g + dr) * std::cos(theta + M_PI + dtheta),
                            (g + dr) * std::sin(theta + M_PI + dtheta));
            } else {
                double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
                start = Vec2(side * g / 2.0, rng.uniform(-g / 2.0, g / 2.0));
                goal = Vec2(-side * (g / 2.0 - rng.uniform(0.0, 0.5)),
                            rng.uniform(-g / 2.0, g / 2.0));
            }
            if (!clear_of(start, starts, min_dist) || !clear_of(goal, goals, min_dist)) continue;
            FullAgentState h;
            h.obs = {start, Vec2(0.0, 0.0), sp.agent_radius};
            h.hidden = {goal, sp.v_pref};
            w.humans.push_back(h);
            starts.push_back(start);
            goals.push_back(goal);
            placed = true;
            break;
        }
        if (!placed) {
            throw GenerationError("spawn_scenario: could not place human " + std::to_string(i) +
                                  " in " + cfg.name() + " after " +
                                  std::to_string(kMaxPlacementTries) + " tries");
        }
    }
    w.human_done.assign(w.humans.size(), false);
    return w;
}

double separation_distance(const ObservableState& robot,
                           const std::vector<ObservableState>& humans) {
    double best = std::numeric_limits<double>::infinity();
    for (const ObservableState& h : humans) {
        double d = distance(robot.p, h.p) - robot.r - h.r;
        best = std::min(best, d);
    }
    return best;
}

std::string termination_name(Termination t) {
    switch (t) {
        case Termination::Running: return "running";
        case Termination::Success: return "success";
        case Termination::Collision: return "collision";
        case Termination::Timeout: return "timeout";
    }
    return "?";
}

Termination check_termination(const World& w, double t, double goal_tolerance, double time_limit) {
    std::vector<ObservableState> obs;
    obs.reserve(w.humans.size());
    for (const auto& h : w.humans) obs.push_back(h.obs);
    if (separation_distance(w.robot.obs, obs) <= 0.0) return Termination::Collision;
    if (distance(w.robot.obs.p, w.robot.hidden.goal) < goal_tolerance) return Termination::Success;
    if (t >= time_limit) return Termination::Timeout;
    return Termination::Running;
}

JointState observe(const World& w) {
    JointState s;
    s.robot = w.robot;
    s.humans.reserve(w.humans.size());
    for (const auto& h : w.humans) s.humans.push_back(h.obs);
    return s;
}

StepEvents step(World& w, const Vec2& robot_action, const SimParams& sp) {
    // Human decisions come from the pre-step snapshot, never from the robot.
    std::vector<Vec2> new_velocities(w.humans.size());
    for (std::size_t i = 0; i < w.humans.size(); ++i) {
        if (w.human_done[i]) {
            new_velocities[i] = Vec2(0.0, 0.0);
            continue;
        }
        std::vector<ObservableState> neighbors;
        neighbors.reserve(w.humans.size() - 1);
        for (std::size_t j = 0; j < w.humans.size(); ++j) {
            if (j != i) neighbors.push_back(w.humans[j].obs);
        }
        if (w.crowd_model == CrowdModel::Orca) {
            OrcaParams op;
            op.time_horizon = sp.orca_time_horizon;
            op.neighbor_range = sp.orca_neighbor_range;
            op.max_speed = w.humans[i].hidden.v_pref;
            op.dt = sp.dt;
            new_velocities[i] = orca_policy(w.humans[i], neighbors, op);
        } else {
            SfmParams fp;
            fp.tau_relax = sp.sfm_tau_relax;
            fp.repulsion_a = sp.sfm_repulsion_a;
            fp.repulsion_b = sp.sfm_repulsion_b;
            fp.max_speed = w.humans[i].hidden.v_pref;
            fp.dt = sp.dt;
            Rng fallback = Rng::substream(w.seed, "sfm-fallback", w.fallback_counter++);
            new_velocities[i] = sfm_policy(w.humans[i], neighbors, fp, fallback);
        }
    }
    for (std::size_t i = 0; i < w.humans.size(); ++i) {
        w.humans[i].obs.v = new_velocities[i];
        w.humans[i].obs.p += new_velocities[i] * sp.dt;
        if (!w.human_done[i] &&
            distance(w.humans[i].obs.p, w.humans[i].hidden.goal) < w.humans[i].obs.r) {
            w.human_done[i] = true;
        }
    }
    w.robot.obs.v = robot_action;
    w.robot.obs.p += robot_action * sp.dt;
    w.time += sp.dt;

    std::vector<ObservableState> obs;
    obs.reserve(w.humans.size());
    for (const auto& h : w.humans) obs.push_back(h.obs);
    StepEvents ev;
    ev.separation = separation_distance(w.robot.obs, obs);
    return ev;
}

Vec2 OrcaRobotPolicy::act(const JointState& s, double) {
    OrcaParams op;
    op.time_horizon = sp_.orca_time_horizon;
    op.neighbor_range = sp_.orca_neighbor_range;
    op.max_speed = s.robot.hidden.v_pref;
    op.dt = sp_.dt;
    op.safety_margin = safety_margin_;
    return orca_policy(s.robot, s.humans, op);
}

EpisodeOutcome run_episode(const ScenarioConfig& cfg, const SimParams& sp,
                           const reward::RewardConfig& rc, RobotPolicy& policy) {
    World w = spawn_scenario(cfg, sp);
    policy.reset();
    EpisodeOutcome out;
    out.initial_state = observe(w);
    int max_steps = static_cast<int>(std::lround(sp.time_limit / sp.dt));
    for (int i = 0; i < max_steps; ++i) {
        JointState s = observe(w);
        Vec2 action = policy.act(s, w.time);
        StepEvents ev = step(w, action, sp);
        double t_now = w.time;
        bool at_goal = distance(w.robot.obs.p, w.robot.hidden.goal) < sp.goal_tolerance;
        double r = reward::compute_reward(ev.separation, at_goal, t_now, rc);
        out.cumulative_reward += r;
        out.trajectory.push_back({t_now, observe(w), action, r, ev.separation});
        if (ev.separation > 0.0 && ev.separation < rc.discomfort_radius) {
            out.discomfort_events.emplace_back(t_now, ev.separation);
        }
        Termination term = check_termination(w, t_now, sp.goal_tolerance, sp.time_limit);
        if (term != Termination::Running) {
            out.result = term;
            out.elapsed = t_now;
            return out;
        }
    }
    out.result = Termination::Timeout;
    out.elapsed = w.time;
    return out;
}

}  // namespace camrl::sim
