#include <doctest.h>

#include <cmath>

#include "camrl/metrics.hpp"
#include "camrl/verify.hpp"

using namespace camrl;

namespace {

sim::EpisodeOutcome outcome_of(sim::Termination t, double elapsed,
                               std::vector<double> separations = {}) {
    sim::EpisodeOutcome ep;
    ep.result = t;
    ep.elapsed = elapsed;
    for (double d : separations) {
        sim::TrajectoryStep st;
        st.separation = d;
        ep.trajectory.push_back(st);
    }
    return ep;
}

}  // namespace

TEST_CASE("compute_metrics rates") {
    std::vector<sim::EpisodeOutcome> outcomes;
    for (int i = 0; i < 44; ++i) outcomes.push_back(outcome_of(sim::Termination::Success, 10.0));
    for (int i = 0; i < 5; ++i) outcomes.push_back(outcome_of(sim::Termination::Collision, 4.0));
    outcomes.push_back(outcome_of(sim::Termination::Timeout, 25.0));
    eval::MetricsRecord m = eval::compute_metrics(outcomes, 0.2);
    CHECK(m.success_rate() == 0.88);
    CHECK(m.counts_consistent());
    CHECK(m.nav_time_mean() == doctest::Approx(10.0));
    CHECK(m.episodes == 50);
}

TEST_CASE("one of each outcome sums exactly to one") {
    std::vector<sim::EpisodeOutcome> outcomes{outcome_of(sim::Termination::Success, 8.0),
                                              outcome_of(sim::Termination::Collision, 3.0),
                                              outcome_of(sim::Termination::Timeout, 25.0)};
    eval::MetricsRecord m = eval::compute_metrics(outcomes, 0.2);
    CHECK(m.counts_consistent());
    CHECK(m.n_success == 1);
    CHECK(m.n_collision == 1);
    CHECK(m.n_timeout == 1);
}

TEST_CASE("discomfort bookkeeping") {
    std::vector<sim::EpisodeOutcome> outcomes{
        outcome_of(sim::Termination::Success, 5.0, {0.5, 0.1, 0.15, 0.3})};
    eval::MetricsRecord m = eval::compute_metrics(outcomes, 0.2);
    CHECK(m.total_steps == 4);
    CHECK(m.discomfort_steps == 2);
    CHECK(m.discomfort_frequency() == 0.5);
    CHECK(m.discomfort_distance_mean() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(m.discomfort_distance_mean() > 0.0);
    CHECK(m.discomfort_distance_mean() < 0.2);
}

TEST_CASE("all-success with no discomfort leaves those fields undefined") {
    std::vector<sim::EpisodeOutcome> outcomes{outcome_of(sim::Termination::Success, 5.0, {1.0, 2.0})};
    eval::MetricsRecord m = eval::compute_metrics(outcomes, 0.2);
    CHECK(m.collision_rate() == 0.0);
    CHECK(m.timeout_rate() == 0.0);
    CHECK(m.discomfort_frequency() == 0.0);
    CHECK_FALSE(m.discomfort_defined());
    std::string text = eval::render_table_text({{"x", m}});
    CHECK(text.find("-") != std::string::npos);
}

TEST_CASE("empty outcome list is rejected") {
    CHECK_THROWS_AS(eval::compute_metrics({}, 0.2), std::invalid_argument);
}

TEST_CASE("table renders in Table-II column order and round-trips") {
    eval::MetricsRecord m;
    m.episodes = 50;
    m.n_success = 44;
    m.n_collision = 5;
    m.n_timeout = 1;
    m.nav_time_sum = 44 * 12.26;
    m.nav_time_sumsq = 44 * (12.26 * 12.26 + 4.0);
    m.total_steps = 2000;
    m.discomfort_steps = 140;
    m.disc_dist_sum = 140 * 0.09;
    m.disc_dist_sumsq = 140 * (0.09 * 0.09 + 0.01);
    std::vector<eval::TableRow> rows{{"orca", m}};
    std::string js = eval::render_table_json(rows);
    auto parsed = eval::parse_table_json(js);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].policy == "orca");
    CHECK(parsed[0].metrics.episodes == m.episodes);
    CHECK(parsed[0].metrics.n_success == m.n_success);
    CHECK(parsed[0].metrics.nav_time_sum == m.nav_time_sum);        // bitwise through JSON
    CHECK(parsed[0].metrics.disc_dist_sumsq == m.disc_dist_sumsq);  // bitwise through JSON
    CHECK(js.find("\"success\"") < js.find("\"collision\""));
    CHECK(js.find("\"collision\"") < js.find("\"timeout\""));
}

TEST_CASE("run_suite smoke: counts, determinism, episode identity") {
    sim::SimParams sp;
    reward::RewardConfig rc;
    eval::PolicyFactory factory = [&]() { return std::make_unique<sim::OrcaRobotPolicy>(sp); };
    std::vector<std::string> envs{"baseline-circle", "dense-circle"};
    std::vector<sim::CrowdModel> cms{sim::CrowdModel::Orca, sim::CrowdModel::Sfm};
    auto cells = eval::run_suite(factory, envs, cms, 2, sp, rc, 2);
    REQUIRE(cells.size() == 4);
    std::size_t total = 0, failures = 0;
    for (const auto& c : cells) {
        total += c.metrics.episodes;
        failures += c.generation_failures.size();
        CHECK(c.metrics.counts_consistent());
    }
    CHECK(total == envs.size() * cms.size() * 2 - failures);

    auto cells2 = eval::run_suite(factory, envs, cms, 2, sp, rc, 1);  // different worker count
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].metrics.n_success == cells2[i].metrics.n_success);
        CHECK(cells[i].metrics.nav_time_sum == cells2[i].metrics.nav_time_sum);
        REQUIRE(cells[i].episodes.size() == cells2[i].episodes.size());
        for (std::size_t j = 0; j < cells[i].episodes.size(); ++j) {
            CHECK(cells[i].episodes[j].elapsed == cells2[i].episodes[j].elapsed);
            CHECK(cells[i].episodes[j].result == cells2[i].episodes[j].result);
        }
    }
}

TEST_CASE("n_cases = 1 smoke run covers 12 cells") {
    sim::SimParams sp;
    reward::RewardConfig rc;
    eval::PolicyFactory factory = [&]() { return std::make_unique<sim::OrcaRobotPolicy>(sp); };
    auto cells = eval::run_suite(factory, eval::kAllEnvironments,
                                 {sim::CrowdModel::Orca, sim::CrowdModel::Sfm}, 1, sp, rc,
                                 eval::default_worker_count());
    CHECK(cells.size() == 12);
    std::size_t total = 0;
    for (const auto& c : cells) total += c.metrics.episodes + c.generation_failures.size();
    CHECK(total == 12);
}

TEST_CASE("pooled metrics merge exactly") {
    eval::MetricsRecord a, b;
    a.episodes = 10;
    a.n_success = 7;
    a.n_collision = 2;
    a.n_timeout = 1;
    b.episodes = 5;
    b.n_success = 1;
    b.n_collision = 3;
    b.n_timeout = 1;
    eval::SuiteCell ca, cb;
    ca.metrics = a;
    cb.metrics = b;
    eval::MetricsRecord p = eval::pool_cells({ca, cb});
    CHECK(p.episodes == 15);
    CHECK(p.n_success == 8);
    CHECK(p.counts_consistent());
}

TEST_CASE("metric identity verification suite") { CHECK(verify::verify_metric_identities().pass); }
