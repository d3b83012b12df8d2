#include "camrl/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace camrl::eval {

using nlohmann::json;

double MetricsRecord::success_rate() const {
    return episodes ? static_cast<double>(n_success) / static_cast<double>(episodes) : 0.0;
}
double MetricsRecord::collision_rate() const {
    return episodes ? static_cast<double>(n_collision) / static_cast<double>(episodes) : 0.0;
}
double MetricsRecord::timeout_rate() const {
    return episodes ? static_cast<double>(n_timeout) / static_cast<double>(episodes) : 0.0;
}
double MetricsRecord::nav_time_mean() const {
    return n_success ? nav_time_sum / static_cast<double>(n_success) : 0.0;
}
double MetricsRecord::nav_time_std() const {
    if (!n_success) return 0.0;
    double m = nav_time_mean();
    double var = nav_time_sumsq / static_cast<double>(n_success) - m * m;
    return std::sqrt(std::max(var, 0.0));
}
double MetricsRecord::discomfort_frequency() const {
    return total_steps ? static_cast<double>(discomfort_steps) / static_cast<double>(total_steps)
                       : 0.0;
}
double MetricsRecord::discomfort_distance_mean() const {
    return discomfort_steps ? disc_dist_sum / static_cast<double>(discomfort_steps) : 0.0;
}
double MetricsRecord::discomfort_distance_std() const {
    if (!discomfort_steps) return 0.0;
    double m = discomfort_distance_mean();
    double var = disc_dist_sumsq / static_cast<double>(discomfort_steps) - m * m;
    return std::sqrt(std::max(var, 0.0));
}

void MetricsRecord::merge(const MetricsRecord& o) {
    episodes += o.episodes;
    n_success += o.n_success;
    n_collision += o.n_collision;
    n_timeout += o.n_timeout;
    nav_time_sum += o.nav_time_sum;
    nav_time_sumsq += o.nav_time_sumsq;
    total_steps += o.total_steps;
    discomfort_steps += o.discomfort_steps;
    disc_dist_sum += o.disc_dist_sum;
    disc_dist_sumsq += o.disc_dist_sumsq;
}

MetricsRecord compute_metrics(const std::vector<sim::EpisodeOutcome>& outcomes,
                              double discomfort_radius) {
    if (outcomes.empty()) throw std::invalid_argument("compute_metrics: no outcomes");
    MetricsRecord m;
    for (const auto& ep : outcomes) {
        m.episodes += 1;
        switch (ep.result) {
            case sim::Termination::Success:
                m.n_success += 1;
                m.nav_time_sum += ep.elapsed;
                m.nav_time_sumsq += ep.elapsed * ep.elapsed;
                break;
            case sim::Termination::Collision: m.n_collision += 1; break;
            case sim::Termination::Timeout: m.n_timeout += 1; break;
            case sim::Termination::Running:
                throw std::invalid_argument("compute_metrics: unfinished episode");
        }
        for (const auto& step : ep.trajectory) {
            m.total_steps += 1;
            if (step.separation > 0.0 && step.separation < discomfort_radius) {
                m.discomfort_steps += 1;
                m.disc_dist_sum += step.separation;
                m.disc_dist_sumsq += step.separation * step.separation;
            }
        }
    }
    return m;
}

int default_worker_count() {
    if (const char* env = std::getenv("CAMRL_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<SuiteCell> run_suite(const PolicyFactory& factory,
                                 const std::vector<std::string>& environments,
                                 const std::vector<sim::CrowdModel>& crowd_models, int n_cases,
                                 const sim::SimParams& sp, const reward::RewardConfig& rc,
                                 int workers) {
    if (n_cases < 1) throw std::invalid_argument("run_suite: n_cases must be >= 1");
    struct Task {
        std::size_t cell;
        std::uint64_t seed;
    };
    std::vector<SuiteCell> cells;
    std::vector<Task> tasks;
    for (const auto& env : environments) {
        for (auto cm : crowd_models) {
            SuiteCell cell;
            cell.env = env;
            cell.crowd = cm;
            for (int c = 0; c < n_cases; ++c) tasks.push_back({cells.size(), static_cast<std::uint64_t>(c)});
            cells.push_back(std::move(cell));
        }
    }

    struct Slot {
        bool failed = false;
        sim::EpisodeOutcome outcome;
    };
    std::vector<Slot> slots(tasks.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        auto policy = factory();
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) break;
            const Task& t = tasks[i];
            sim::ScenarioConfig cfg =
                sim::ScenarioConfig::from_name(cells[t.cell].env, cells[t.cell].crowd, t.seed);
            try {
                slots[i].outcome = sim::run_episode(cfg, sp, rc, *policy);
            } catch (const sim::GenerationError&) {
                slots[i].failed = true;
            }
        }
    };

    int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Deterministic aggregation in task order.
    std::vector<std::vector<sim::EpisodeOutcome>> per_cell(cells.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        if (slots[i].failed) {
            cells[t.cell].generation_failures.push_back(t.seed);
            continue;
        }
        sim::EpisodeOutcome& ep = slots[i].outcome;
        cells[t.cell].episodes.push_back({t.seed, sim::termination_name(ep.result), ep.elapsed,
                                          ep.trajectory.size(), ep.cumulative_reward});
        per_cell[t.cell].push_back(std::move(ep));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!per_cell[c].empty()) {
            cells[c].metrics = compute_metrics(per_cell[c], rc.discomfort_radius);
        }
    }
    return cells;
}

MetricsRecord pool_cells(const std::vector<SuiteCell>& cells) {
    MetricsRecord m;
    for (const auto& c : cells) m.merge(c.metrics);
    return m;
}

namespace {

json metrics_to_json(const MetricsRecord& m) {
    return json{{"episodes", m.episodes},
                {"n_success", m.n_success},
                {"n_collision", m.n_collision},
                {"n_timeout", m.n_timeout},
                {"nav_time_sum", m.nav_time_sum},
                {"nav_time_sumsq", m.nav_time_sumsq},
                {"total_steps", m.total_steps},
                {"discomfort_steps", m.discomfort_steps},
                {"disc_dist_sum", m.disc_dist_sum},
                {"disc_dist_sumsq", m.disc_dist_sumsq}};
}

MetricsRecord metrics_from_json(const json& j) {
    MetricsRecord m;
    m.episodes = j.at("episodes").get<std::size_t>();
    m.n_success = j.at("n_success").get<std::size_t>();
    m.n_collision = j.at("n_collision").get<std::size_t>();
    m.n_timeout = j.at("n_timeout").get<std::size_t>();
    m.nav_time_sum = j.at("nav_time_sum").get<double>();
    m.nav_time_sumsq = j.at("nav_time_sumsq").get<double>();
    m.total_steps = j.at("total_steps").get<std::size_t>();
    m.discomfort_steps = j.at("discomfort_steps").get<std::size_t>();
    m.disc_dist_sum = j.at("disc_dist_sum").get<double>();
    m.disc_dist_sumsq = j.at("disc_dist_sumsq").get<double>();
    return m;
}

std::string fmt(double v, int prec = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

}  // namespace

std::string render_table_json(const std::vector<TableRow>& rows) {
    json out;
    out["columns"] = {"success", "collision", "timeout", "time", "disc_freq", "disc_dist"};
    out["rows"] = json::array();
    for (const auto& r : rows) {
        json jr;
        jr["policy"] = r.policy;
        jr["success"] = r.metrics.success_rate();
        jr["collision"] = r.metrics.collision_rate();
        jr["timeout"] = r.metrics.timeout_rate();
        jr["metrics"] = metrics_to_json(r.metrics);
        out["rows"].push_back(jr);
    }
    return out.dump(2);
}

std::vector<TableRow> parse_table_json(const std::string& text) {
    json in = json::parse(text);
    std::vector<TableRow> rows;
    for (const auto& jr : in.at("rows")) {
        rows.push_back({jr.at("policy").get<std::string>(), metrics_from_json(jr.at("metrics"))});
    }
    return rows;
}

std::string render_table_text(const std::vector<TableRow>& rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %8s %10s %8s %14s %10s %14s\n", "Policy", "Success",
                  "Collision", "Timeout", "Time (s)", "Disc.Freq", "Disc.Dist (m)");
    out += line;
    out += std::string(80, '-') + "\n";
    for (const auto& r : rows) {
        const MetricsRecord& m = r.metrics;
        std::string time_s =
            m.nav_time_defined() ? fmt(m.nav_time_mean()) + "+-" + fmt(m.nav_time_std()) : "-";
        std::string disc_s = m.discomfort_defined() ? fmt(m.discomfort_distance_mean()) + "+-" +
                                                          fmt(m.discomfort_distance_std())
                                                    : "-";
        std::snprintf(line, sizeof(line), "%-12s %8s %10s %8s %14s %10s %14s\n", r.policy.c_str(),
                      fmt(m.success_rate()).c_str(), fmt(m.collision_rate()).c_str(),
                      fmt(m.timeout_rate()).c_str(), time_s.c_str(),
                      fmt(m.discomfort_frequency()).c_str(), disc_s.c_str());
        out += line;
    }
    return out;
}

}  // namespace camrl::eval
