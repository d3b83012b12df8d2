#include <doctest.h>

#include <cmath>

#include "camrl/crowdsim.hpp"
#include "camrl/orca.hpp"
#include "camrl/reward.hpp"
#include "camrl/sfm.hpp"
#include "camrl/verify.hpp"

using namespace camrl;

namespace {
sim::SimParams sp;
}

TEST_CASE("scenario table pins the Diverse-4 geometry") {
    using sim::ScenarioScale;
    using sim::ScenarioShape;
    struct Row {
        ScenarioShape shape;
        ScenarioScale scale;
        double geometry;
        int humans;
    };
    const Row rows[] = {
        {ScenarioShape::Circle, ScenarioScale::Baseline, 4.0, 5},
        {ScenarioShape::Square, ScenarioScale::Baseline, 10.0, 10},
        {ScenarioShape::Circle, ScenarioScale::Dense, 4.0, 10},
        {ScenarioShape::Square, ScenarioScale::Dense, 10.0, 20},
        {ScenarioShape::Circle, ScenarioScale::Large, 6.0, 12},
        {ScenarioShape::Square, ScenarioScale::Large, 14.0, 20},
    };
    for (const Row& r : rows) {
        sim::ScenarioConfig cfg = sim::ScenarioConfig::make(r.shape, r.scale, sim::CrowdModel::Orca, 0);
        CHECK(cfg.geometry == r.geometry);
        CHECK(cfg.human_count == r.humans);
    }
}

TEST_CASE("spawn_scenario: baseline circle") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Orca, 0);
    sim::World w = sim::spawn_scenario(cfg, sp);
    CHECK(w.humans.size() == 5);
    CHECK(w.robot.obs.p == Vec2(0.0, -4.0));
    CHECK(w.robot.hidden.goal == Vec2(0.0, 4.0));
    for (const auto& h : w.humans) {
        CHECK(h.obs.p.norm() == doctest::Approx(4.0).epsilon(1e-12));  // start on the circle
        // goal roughly opposite: distance from the antipode is the perturbation
        CHECK(distance(h.hidden.goal, -h.obs.p) < 1.5);
    }
}

TEST_CASE("spawn_scenario determinism and seeds") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("dense-circle", sim::CrowdModel::Sfm, 17);
    sim::World a = sim::spawn_scenario(cfg, sp);
    sim::World b = sim::spawn_scenario(cfg, sp);
    REQUIRE(a.humans.size() == b.humans.size());
    for (std::size_t i = 0; i < a.humans.size(); ++i) {
        CHECK(a.humans[i].obs.p == b.humans[i].obs.p);
        CHECK(a.humans[i].hidden.goal == b.humans[i].hidden.goal);
    }
    sim::ScenarioConfig other = cfg;
    other.seed = 18;
    sim::World c = sim::spawn_scenario(other, sp);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.humans.size(); ++i) {
        if (!(a.humans[i].obs.p == c.humans[i].obs.p)) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("spawn_scenario: large square bounds") {
    for (std::uint64_t seed : {0ull, 5ull, 9ull}) {
        sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("large-square", sim::CrowdModel::Orca, seed);
        sim::World w = sim::spawn_scenario(cfg, sp);
        CHECK(w.humans.size() == 20);
        for (const auto& h : w.humans) {
            CHECK(std::fabs(h.obs.p.x) <= 7.0 + 1e-12);
            CHECK(std::fabs(h.obs.p.y) <= 7.0 + 1e-12);
            CHECK(std::fabs(h.hidden.goal.x) <= 7.0 + 1e-12);
        }
    }
}

TEST_CASE("spawn_scenario: overcrowded config raises GenerationError") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Orca, 0);
    cfg.human_count = 200;  // cannot fit on a 4 m circle with 0.8 m clearance
    CHECK_THROWS_AS(sim::spawn_scenario(cfg, sp), sim::GenerationError);
}

TEST_CASE("orca_policy") {
    sim::OrcaParams op;
    op.max_speed = 1.0;
    op.dt = 0.25;
    SUBCASE("no neighbors: exactly the preferred velocity") {
        sim::FullAgentState a;
        a.obs = {{0, 0}, {0, 0}, 0.3};
        a.hidden = {{10, 0}, 1.0};
        Vec2 v = sim::orca_policy(a, {}, op);
        CHECK(v.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("head-on symmetric encounter returns mirrored velocities") {
        sim::FullAgentState a, b;
        a.obs = {{-2, 0}, {1, 0}, 0.3};
        a.hidden = {{2, 0}, 1.0};
        b.obs = {{2, 0}, {-1, 0}, 0.3};
        b.hidden = {{-2, 0}, 1.0};
        Vec2 va = sim::orca_policy(a, {b.obs}, op);
        Vec2 vb = sim::orca_policy(b, {a.obs}, op);
        CHECK(va.x == doctest::Approx(-vb.x).epsilon(1e-9));
        CHECK(va.y == doctest::Approx(-vb.y).epsilon(1e-9));
    }
    SUBCASE("neighbor far beyond the horizon leaves the program unconstrained") {
        sim::FullAgentState a;
        a.obs = {{0, 0}, {1, 0}, 0.3};
        a.hidden = {{10, 0}, 1.0};
        sim::ObservableState far{{-9.0, 0.0}, {0, 0}, 0.3};  // behind the agent
        Vec2 v = sim::orca_policy(a, {far}, op);
        CHECK(v.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("two-agent symmetric encounter keeps separation non-negative") {
        sim::World w;
        w.crowd_model = sim::CrowdModel::Orca;
        sim::FullAgentState a, b;
        a.obs = {{-3, 0.0}, {0, 0}, 0.3};
        a.hidden = {{3, 0.001}, 1.0};  // near-symmetric, slightly offset goals
        b.obs = {{3, 0}, {0, 0}, 0.3};
        b.hidden = {{-3, 0}, 1.0};
        w.humans = {a, b};
        w.human_done = {false, false};
        w.robot.obs = {{100, 100}, {0, 0}, 0.3};  // far away
        w.robot.hidden = {{100, 100}, 1.0};
        for (int s = 0; s < 60; ++s) {
            sim::step(w, {0, 0}, sp);
            double sep = distance(w.humans[0].obs.p, w.humans[1].obs.p) - 0.6;
            CHECK(sep >= 0.0);
        }
    }
}

TEST_CASE("sfm_policy") {
    sim::SfmParams fp;
    Rng fb(0);
    SUBCASE("goal attraction accelerates at (v_pref - 0)/tau") {
        sim::FullAgentState a;
        a.obs = {{0, 0}, {0, 0}, 0.3};
        a.hidden = {{10, 0}, 1.0};
        Vec2 v = sim::sfm_policy(a, {}, fp, fb);
        // acceleration 2.0 toward goal, integrated over dt
        CHECK(v.x == doctest::Approx(2.0 * fp.dt).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("agent resting at its goal feels no goal force") {
        sim::FullAgentState a;
        a.obs = {{3, 2}, {0, 0}, 0.3};
        a.hidden = {{3, 2}, 1.0};
        Vec2 v = sim::sfm_policy(a, {}, fp, fb);
        CHECK(v.x == 0.0);
        CHECK(v.y == 0.0);
    }
    SUBCASE("touching neighbor repels with magnitude exactly A") {
        sim::FullAgentState a;
        a.obs = {{0, 0}, {0, 0}, 0.3};
        a.hidden = {{0, 0}, 1.0};  // at goal: isolates the repulsion term
        sim::ObservableState n{{0.6, 0.0}, {0, 0}, 0.3};
        Vec2 v = sim::sfm_policy(a, {n}, fp, fb);
        CHECK(v.x == doctest::Approx(-fp.repulsion_a * fp.dt).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("speeds never exceed the max speed") {
        Rng rng(8);
        for (int k = 0; k < 50; ++k) {
            sim::FullAgentState a;
            a.obs = {{rng.uniform(-3, 3), rng.uniform(-3, 3)},
                     {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                     0.3};
            a.hidden = {{rng.uniform(-3, 3), rng.uniform(-3, 3)}, 1.0};
            std::vector<sim::ObservableState> near;
            for (int j = 0; j < 3; ++j) {
                near.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {0, 0}, 0.3});
            }
            Vec2 v = sim::sfm_policy(a, near, fp, fb);
            CHECK(v.norm() <= fp.max_speed + 1e-12);
        }
    }
}

TEST_CASE("step kinematics and the invisible robot") {
    SUBCASE("robot alone advances by action * dt") {
        sim::World w;
        w.robot.obs = {{0, 0}, {0, 0}, 0.3};
        w.robot.hidden = {{5, 5}, 1.0};
        sim::step(w, {1.0, 0.0}, sp);
        CHECK(w.robot.obs.p == Vec2(0.25, 0.0));
        sim::step(w, {0.0, 0.0}, sp);
        CHECK(w.robot.obs.p == Vec2(0.25, 0.0));
    }
    SUBCASE("human updates ignore the robot bitwise") {
        sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Orca, 3);
        sim::World w1 = sim::spawn_scenario(cfg, sp);
        sim::World w2 = w1;
        for (int s = 0; s < 40; ++s) {
            sim::step(w1, {1.0, 0.0}, sp);   // robot charging right
            sim::step(w2, {-1.0, 0.5}, sp);  // robot doing something else
            for (std::size_t i = 0; i < w1.humans.size(); ++i) {
                CHECK(w1.humans[i].obs.p.x == w2.humans[i].obs.p.x);
                CHECK(w1.humans[i].obs.p.y == w2.humans[i].obs.p.y);
            }
        }
    }
}

TEST_CASE("separation_distance") {
    sim::ObservableState robot{{0, 0}, {0, 0}, 0.3};
    CHECK(sim::separation_distance(robot, {{{1.0, 0.0}, {0, 0}, 0.3}}) ==
          doctest::Approx(0.4).epsilon(1e-12));
    CHECK(sim::separation_distance(robot, {{{0.5, 0.0}, {0, 0}, 0.3}}) < 0.0);
    CHECK(std::isinf(sim::separation_distance(robot, {})));
}

TEST_CASE("check_termination ordering") {
    sim::World w;
    w.robot.obs = {{0, 0}, {0, 0}, 0.3};
    w.robot.hidden = {{0.1, 0.0}, 1.0};  // within goal tolerance
    SUBCASE("collision dominates success") {
        sim::FullAgentState h;
        h.obs = {{0.5, 0.0}, {0, 0}, 0.3};  // overlapping
        w.humans = {h};
        w.human_done = {false};
        CHECK(sim::check_termination(w, 3.0, 0.3, 25.0) == sim::Termination::Collision);
    }
    SUBCASE("success inside tolerance") {
        CHECK(sim::check_termination(w, 3.0, 0.3, 25.0) == sim::Termination::Success);
    }
    SUBCASE("timeout at exactly 25 s") {
        w.robot.hidden.goal = {5, 5};
        CHECK(sim::check_termination(w, 25.0, 0.3, 25.0) == sim::Termination::Timeout);
        CHECK(sim::check_termination(w, 24.75, 0.3, 25.0) == sim::Termination::Running);
    }
}

TEST_CASE("humans that reach their goals hold position") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Orca, 1);
    sim::World w = sim::spawn_scenario(cfg, sp);
    for (int s = 0; s < 200; ++s) sim::step(w, {0, 0}, sp);
    int done = 0;
    for (std::size_t i = 0; i < w.humans.size(); ++i) {
        if (w.human_done[i]) {
            ++done;
            Vec2 before = w.humans[i].obs.p;
            sim::step(w, {0, 0}, sp);
            CHECK(w.humans[i].obs.p == before);
        }
    }
    CHECK(done > 0);  // 50 s is plenty for an 8 m crossing
}

TEST_CASE("run_episode is deterministic and classifies outcomes") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Sfm, 4);
    reward::RewardConfig rc;
    sim::OrcaRobotPolicy p1(sp), p2(sp);
    sim::EpisodeOutcome a = sim::run_episode(cfg, sp, rc, p1);
    sim::EpisodeOutcome b = sim::run_episode(cfg, sp, rc, p2);
    CHECK(a.result == b.result);
    CHECK(a.elapsed == b.elapsed);
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        CHECK(a.trajectory[i].state.robot.obs.p == b.trajectory[i].state.robot.obs.p);
        CHECK(a.trajectory[i].reward == b.trajectory[i].reward);
    }
    CHECK(a.elapsed <= sp.time_limit + 1e-12);
    CHECK(a.result != sim::Termination::Running);
}

TEST_CASE("invisible-robot property across policies and environments") {
    auto res = verify::verify_invisible_robot(3, false);
    INFO(res.detail);
    CHECK(res.pass);
}
