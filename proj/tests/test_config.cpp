#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "camrl/config.hpp"
#include "camrl/simlog.hpp"
#include "camrl/valuenet.hpp"
#include "camrl/checkpoint.hpp"

using namespace camrl;

TEST_CASE("config parsing") {
    cfg::Config c = cfg::Config::parse_string(
        "# a comment\n"
        "gamma = 0.9\n"
        "env = baseline-circle   # trailing comment\n"
        "rl_episodes = 1000\n"
        "discount_mode=lineage\n");
    CHECK(c.get_double("gamma", 0) == 0.9);
    CHECK(c.get("env") == "baseline-circle");
    CHECK(c.get_int("rl_episodes", 0) == 1000);
    CHECK(c.get_or("missing", "fallback") == "fallback");
    CHECK_THROWS_AS(c.get("missing"), cfg::ConfigError);
    CHECK_THROWS_AS(c.get_double("env", 0), cfg::ConfigError);
    CHECK_THROWS_AS(cfg::Config::parse_string("not a kv line\n"), cfg::ConfigError);
}

TEST_CASE("config include mechanism with override") {
    std::ofstream base("cfg_base_test.cfg");
    base << "gamma = 0.9\nlr = 0.001\n";
    base.close();
    std::ofstream main_f("cfg_main_test.cfg");
    main_f << "include cfg_base_test.cfg\nlr = 0.01\nseed = 7\n";
    main_f.close();
    cfg::Config c = cfg::Config::parse_file("cfg_main_test.cfg");
    CHECK(c.get_double("gamma", 0) == 0.9);   // inherited
    CHECK(c.get_double("lr", 0) == 0.01);     // overridden
    CHECK(c.get_int("seed", 0) == 7);
    std::remove("cfg_base_test.cfg");
    std::remove("cfg_main_test.cfg");
}

TEST_CASE("config hash is canonical") {
    cfg::Config a = cfg::Config::parse_string("b = 2\na = 1\n");
    cfg::Config b = cfg::Config::parse_string("a = 1\nb = 2\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash_hex().size() == 16);
    cfg::Config c = cfg::Config::parse_string("a = 1\nb = 3\n");
    CHECK(a.hash() != c.hash());
}

TEST_CASE("unknown key detection") {
    cfg::Config c = cfg::Config::parse_string("gamma = 0.9\ngamm = 0.8\n");
    auto unknown = c.unknown_keys({"gamma", "lr"});
    REQUIRE(unknown.size() == 1);
    CHECK(unknown[0] == "gamm");
}

TEST_CASE("value net checkpoint round-trip preserves forward outputs bit-exactly") {
    rl::ValueNetConfig vc;
    vc.d_model = 16;
    vc.embed_dim = 16;
    vc.rnn_hidden = 16;
    vc.window = 3;
    vc.ssm_state = 4;
    rl::ValueNet net(vc, 77);
    Rng rng(78);
    for (auto* p : net.params().all()) {
        if (p->name.find("w_out") != std::string::npos)
            for (double& v : p->value.data) v = rng.uniform(-0.3, 0.3);
    }
    sim::JointState s;
    s.robot.obs = {{0.3, -1.2}, {0.1, 0.4}, 0.3};
    s.robot.hidden = {{2.0, 3.0}, 1.0};
    s.humans.push_back({{1.0, 1.0}, {-0.2, 0.1}, 0.3});
    rl::TemporalCrowdState w = rl::make_window({s}, vc.window);
    std::vector<double> before = net.values(w);

    num::Checkpoint ck;
    ck.put_params(net.params());
    ck.meta["encoder"] = "camrl";
    num::save_checkpoint("vnet_roundtrip_test.ckpt", ck);
    rl::ValueNet net2(vc, 999);  // different init
    num::load_checkpoint("vnet_roundtrip_test.ckpt").load_params(net2.params());
    std::vector<double> after = net2.values(w);
    CHECK(before == after);  // bitwise
    std::remove("vnet_roundtrip_test.ckpt");
}

TEST_CASE("trajectory log round-trips through the documented schema") {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name("baseline-circle", sim::CrowdModel::Orca, 2);
    sim::SimParams sp;
    reward::RewardConfig rc;
    sim::OrcaRobotPolicy policy(sp);
    sim::EpisodeOutcome ep = sim::run_episode(cfg, sp, rc, policy);

    std::stringstream ss;
    simlog::write_trajectory_log(ss, ep, "orca", "deadbeefdeadbeef", 2);
    simlog::ParsedTrajectory parsed = simlog::parse_trajectory_log(ss);
    CHECK(parsed.policy == "orca");
    CHECK(parsed.config_hash == "deadbeefdeadbeef");
    CHECK(parsed.seed == 2);
    CHECK(parsed.result == sim::termination_name(ep.result));
    REQUIRE(parsed.steps.size() == ep.trajectory.size());
    for (std::size_t i = 0; i < parsed.steps.size(); ++i) {
        CHECK(parsed.steps[i].reward == ep.trajectory[i].reward);
        CHECK(parsed.steps[i].separation == ep.trajectory[i].separation);
        CHECK(parsed.steps[i].state.robot.obs.p == ep.trajectory[i].state.robot.obs.p);
        CHECK(parsed.steps[i].state.humans.size() == ep.trajectory[i].state.humans.size());
    }
}
