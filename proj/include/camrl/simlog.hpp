#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "camrl/crowdsim.hpp"

namespace camrl::simlog {

nlohmann::json to_json(const Vec2& v);
nlohmann::json to_json(const sim::ObservableState& s);
nlohmann::json to_json(const sim::FullAgentState& s);
nlohmann::json to_json(const sim::JointState& s);

// Line-delimited trajectory log: header record (config hash, seed, policy),
// one record per step (time, robot state, human states, action, reward, d_t),
// and a final outcome record.
void write_trajectory_log(std::ostream& os, const sim::EpisodeOutcome& episode,
                          const std::string& policy, const std::string& config_hash,
                          std::uint64_t seed);

struct ParsedTrajectory {
    std::string policy;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string result;
    std::vector<sim::TrajectoryStep> steps;
};

ParsedTrajectory parse_trajectory_log(std::istream& is);

}  // namespace camrl::simlog
