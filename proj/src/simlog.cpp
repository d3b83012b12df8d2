#include "camrl/simlog.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace camrl::simlog {

using nlohmann::json;

json to_json(const Vec2& v) { return json::array({v.x, v.y}); }

json to_json(const sim::ObservableState& s) {
    return json{{"p", to_json(s.p)}, {"v", to_json(s.v)}, {"r", s.r}};
}

json to_json(const sim::FullAgentState& s) {
    json j = to_json(s.obs);
    j["goal"] = to_json(s.hidden.goal);
    j["v_pref"] = s.hidden.v_pref;
    return j;
}

json to_json(const sim::JointState& s) {
    json humans = json::array();
    for (const auto& h : s.humans) humans.push_back(to_json(h));
    return json{{"robot", to_json(s.robot)}, {"humans", humans}};
}

namespace {

Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

sim::ObservableState obs_from(const json& j) {
    return {vec_from(j.at("p")), vec_from(j.at("v")), j.at("r").get<double>()};
}

sim::JointState joint_from(const json& j) {
    sim::JointState s;
    const json& r = j.at("robot");
    s.robot.obs = obs_from(r);
    s.robot.hidden = {vec_from(r.at("goal")), r.at("v_pref").get<double>()};
    for (const auto& h : j.at("humans")) s.humans.push_back(obs_from(h));
    return s;
}

}  // namespace

void write_trajectory_log(std::ostream& os, const sim::EpisodeOutcome& episode,
                          const std::string& policy, const std::string& config_hash,
                          std::uint64_t seed) {
    json header{{"record", "header"},
                {"policy", policy},
                {"config_hash", config_hash},
                {"seed", seed}};
    os << header.dump() << "\n";
    json initial{{"record", "initial"}, {"state", to_json(episode.initial_state)}};
    os << initial.dump() << "\n";
    for (const auto& step : episode.trajectory) {
        json rec{{"record", "step"},
                 {"t", step.time},
                 {"state", to_json(step.state)},
                 {"action", to_json(step.action)},
                 {"reward", step.reward},
                 {"d", step.separation}};
        os << rec.dump() << "\n";
    }
    json outcome{{"record", "outcome"},
                 {"result", sim::termination_name(episode.result)},
                 {"elapsed", episode.elapsed},
                 {"cumulative_reward", episode.cumulative_reward}};
    os << outcome.dump() << "\n";
}

ParsedTrajectory parse_trajectory_log(std::istream& is) {
    ParsedTrajectory out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string kind = j.at("record").get<std::string>();
        if (kind == "header") {
            out.policy = j.at("policy").get<std::string>();
            out.config_hash = j.at("config_hash").get<std::string>();
            out.seed = j.at("seed").get<std::uint64_t>();
        } else if (kind == "step") {
            sim::TrajectoryStep step;
            step.time = j.at("t").get<double>();
            step.state = joint_from(j.at("state"));
            step.action = vec_from(j.at("action"));
            step.reward = j.at("reward").get<double>();
            step.separation = j.at("d").get<double>();
            out.steps.push_back(std::move(step));
        } else if (kind == "outcome") {
            out.result = j.at("result").get<std::string>();
        }
    }
    if (out.result.empty()) throw std::runtime_error("trajectory log missing outcome record");
    return out;
}

}  // namespace camrl::simlog
