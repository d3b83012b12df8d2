#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "camrl/crowdsim.hpp"
#include "camrl/reward.hpp"

namespace camrl::eval {

// Table-I metrics, kept as exact counts and sums so merged records stay
// exact; rates are derived on demand.
struct MetricsRecord {
    std::size_t episodes = 0;
    std::size_t n_success = 0;
    std::size_t n_collision = 0;
    std::size_t n_timeout = 0;
    double nav_time_sum = 0.0;   // successes only
    double nav_time_sumsq = 0.0;
    std::size_t total_steps = 0;
    std::size_t discomfort_steps = 0;  // steps with 0 < d_t < r_c
    double disc_dist_sum = 0.0;        // d_t over discomfort steps
    double disc_dist_sumsq = 0.0;

    double success_rate() const;
    double collision_rate() const;
    double timeout_rate() const;
    bool counts_consistent() const { return n_success + n_collision + n_timeout == episodes; }
    bool nav_time_defined() const { return n_success > 0; }
    double nav_time_mean() const;
    double nav_time_std() const;
    double discomfort_frequency() const;
    bool discomfort_defined() const { return discomfort_steps > 0; }
    double discomfort_distance_mean() const;
    double discomfort_distance_std() const;

    void merge(const MetricsRecord& other);
};

MetricsRecord compute_metrics(const std::vector<sim::EpisodeOutcome>& outcomes,
                              double discomfort_radius);

// Per-episode summary kept in results files (full trajectories are dropped
// after metric extraction).
struct EpisodeSummary {
    std::uint64_t seed = 0;
    std::string result;
    double elapsed = 0.0;
    std::size_t steps = 0;
    double cumulative_reward = 0.0;
};

struct SuiteCell {
    std::string env;
    sim::CrowdModel crowd = sim::CrowdModel::Orca;
    MetricsRecord metrics;
    std::vector<EpisodeSummary> episodes;
    std::vector<std::uint64_t> generation_failures;
};

using PolicyFactory = std::function<std::unique_ptr<sim::RobotPolicy>()>;

inline const std::vector<std::string> kAllEnvironments = {
    "baseline-circle", "baseline-square", "dense-circle",
    "dense-square",    "large-circle",    "large-square"};

// Runs the policy on seeds 0..n_cases-1 per (environment, crowd model) cell.
// Episodes are independent and may run on parallel workers; results are
// deterministic regardless of worker count.
std::vector<SuiteCell> run_suite(const PolicyFactory& factory,
                                 const std::vector<std::string>& environments,
                                 const std::vector<sim::CrowdModel>& crowd_models, int n_cases,
                                 const sim::SimParams& sp, const reward::RewardConfig& rc,
                                 int workers);

MetricsRecord pool_cells(const std::vector<SuiteCell>& cells);

// ---- Table-II style comparison tables ----

struct TableRow {
    std::string policy;
    MetricsRecord metrics;
};

// Machine-readable JSON with the column order Success, Collision, Timeout,
// Time, Disc.Freq, Disc.Dist; parse() inverts render() exactly.
std::string render_table_json(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_table_json(const std::string& text);
std::string render_table_text(const std::vector<TableRow>& rows);

int default_worker_count();

}  // namespace camrl::eval
