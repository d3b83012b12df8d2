// camrl command line: train / evaluate / rollout / verify.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "camrl/checkpoint.hpp"
#include "camrl/config.hpp"
#include "camrl/metrics.hpp"
#include "camrl/simlog.hpp"
#include "camrl/trainer.hpp"
#include "camrl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace camrl;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;
constexpr int kVerifyFailure = 4;

const std::set<std::string>& allowed_keys() {
    static const std::set<std::string> keys = {
        // training
        "gamma", "discount_mode", "window", "lr", "batch_size", "buffer_capacity",
        "target_sync_k", "il_episodes", "il_epochs", "il_safety_margin", "rl_episodes",
        "rl_train_batches", "eps_start", "eps_end", "eps_decay_fraction", "val_interval",
        "val_episodes", "seed", "env", "crowd_model", "checkpoint_every",
        // network
        "encoder", "d_model", "embed_dim", "rnn_hidden", "ssm_state", "expansion",
        "conv_kernel", "mamba_blocks",
        // simulation
        "dt", "time_limit", "agent_radius", "v_pref", "goal_tolerance", "orca_time_horizon",
        "orca_neighbor_range", "sfm_tau_relax", "sfm_repulsion_a", "sfm_repulsion_b",
        // reward
        "r_c", "collision_penalty", "goal_reward", "timeout_penalty",
    };
    return keys;
}

sim::SimParams build_sim_params(const cfg::Config& c) {
    sim::SimParams sp;
    sp.dt = c.get_double("dt", sp.dt);
    sp.time_limit = c.get_double("time_limit", sp.time_limit);
    sp.agent_radius = c.get_double("agent_radius", sp.agent_radius);
    sp.v_pref = c.get_double("v_pref", sp.v_pref);
    sp.goal_tolerance = c.get_double("goal_tolerance", sp.agent_radius);
    sp.orca_time_horizon = c.get_double("orca_time_horizon", sp.orca_time_horizon);
    sp.orca_neighbor_range = c.get_double("orca_neighbor_range", sp.orca_neighbor_range);
    sp.sfm_tau_relax = c.get_double("sfm_tau_relax", sp.sfm_tau_relax);
    sp.sfm_repulsion_a = c.get_double("sfm_repulsion_a", sp.sfm_repulsion_a);
    sp.sfm_repulsion_b = c.get_double("sfm_repulsion_b", sp.sfm_repulsion_b);
    return sp;
}

reward::RewardConfig build_reward(const cfg::Config& c, const sim::SimParams& sp) {
    reward::RewardConfig rc;
    rc.discomfort_radius = c.get_double("r_c", rc.discomfort_radius);
    rc.collision_penalty = c.get_double("collision_penalty", rc.collision_penalty);
    rc.goal_reward = c.get_double("goal_reward", rc.goal_reward);
    rc.timeout_penalty = c.get_double("timeout_penalty", rc.timeout_penalty);
    rc.dt = sp.dt;
    rc.episode_limit = sp.time_limit;
    return rc;
}

rl::TrainConfig build_train(const cfg::Config& c) {
    rl::TrainConfig t;
    t.gamma = c.get_double("gamma", t.gamma);
    t.discount_paper_mode = c.get_or("discount_mode", "lineage") == "paper";
    t.window = static_cast<std::size_t>(c.get_int("window", static_cast<std::int64_t>(t.window)));
    t.lr = c.get_double("lr", t.lr);
    t.batch_size = static_cast<std::size_t>(c.get_int("batch_size", 100));
    t.buffer_capacity = static_cast<std::size_t>(c.get_int("buffer_capacity", 50000));
    t.target_sync_interval = static_cast<std::size_t>(c.get_int("target_sync_k", 50));
    t.il_episodes = static_cast<std::size_t>(c.get_int("il_episodes", 300));
    t.il_epochs = static_cast<std::size_t>(c.get_int("il_epochs", 50));
    t.il_safety_margin = c.get_double("il_safety_margin", t.il_safety_margin);
    t.rl_episodes = static_cast<std::size_t>(c.get_int("rl_episodes", 1000));
    t.rl_train_batches = static_cast<std::size_t>(c.get_int("rl_train_batches", 8));
    t.eps_start = c.get_double("eps_start", t.eps_start);
    t.eps_end = c.get_double("eps_end", t.eps_end);
    t.eps_decay_fraction = c.get_double("eps_decay_fraction", t.eps_decay_fraction);
    t.val_interval = static_cast<std::size_t>(c.get_int("val_interval", 100));
    t.val_episodes = static_cast<std::size_t>(c.get_int("val_episodes", 10));
    t.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    t.env = c.get_or("env", "baseline-circle");
    t.crowd = sim::crowd_model_from_name(c.get_or("crowd_model", "orca"));
    return t;
}

rl::ValueNetConfig build_vnet(const cfg::Config& c, const std::string& policy) {
    rl::ValueNetConfig v;
    v.encoder = rl::encoder_from_name(c.get_or("encoder", policy));
    v.d_model = static_cast<std::size_t>(c.get_int("d_model", 64));
    v.embed_dim = static_cast<std::size_t>(c.get_int("embed_dim", 64));
    v.rnn_hidden = static_cast<std::size_t>(c.get_int("rnn_hidden", 64));
    v.window = static_cast<std::size_t>(c.get_int("window", 8));
    v.ssm_state = static_cast<std::size_t>(c.get_int("ssm_state", 16));
    v.expansion = static_cast<std::size_t>(c.get_int("expansion", 2));
    v.conv_kernel = static_cast<std::size_t>(c.get_int("conv_kernel", 4));
    v.mamba_blocks = static_cast<std::size_t>(c.get_int("mamba_blocks", 4));
    return v;
}

void save_net(const std::string& path, const rl::ValueNet& net, const num::Adam* adam,
              std::map<std::string, std::string> meta) {
    num::Checkpoint ck;
    ck.put_params(net.params());
    const auto& vc = net.config();
    meta["encoder"] = rl::encoder_name(vc.encoder);
    meta["d_model"] = std::to_string(vc.d_model);
    meta["embed_dim"] = std::to_string(vc.embed_dim);
    meta["rnn_hidden"] = std::to_string(vc.rnn_hidden);
    meta["window"] = std::to_string(vc.window);
    meta["ssm_state"] = std::to_string(vc.ssm_state);
    meta["expansion"] = std::to_string(vc.expansion);
    meta["conv_kernel"] = std::to_string(vc.conv_kernel);
    meta["mamba_blocks"] = std::to_string(vc.mamba_blocks);
    if (adam) {
        for (auto& [k, arr] : adam->export_state()) ck.arrays[k] = arr;
        meta["adam_t"] = std::to_string(adam->step_count());
    }
    ck.meta = std::move(meta);
    num::save_checkpoint(path, ck);
}

std::unique_ptr<rl::ValueNet> load_net(const std::string& path, num::Checkpoint* out_ck = nullptr) {
    num::Checkpoint ck = num::load_checkpoint(path);
    rl::ValueNetConfig vc;
    vc.encoder = rl::encoder_from_name(ck.meta.at("encoder"));
    vc.d_model = std::stoul(ck.meta.at("d_model"));
    vc.embed_dim = std::stoul(ck.meta.at("embed_dim"));
    vc.rnn_hidden = std::stoul(ck.meta.at("rnn_hidden"));
    vc.window = std::stoul(ck.meta.at("window"));
    vc.ssm_state = std::stoul(ck.meta.at("ssm_state"));
    vc.expansion = std::stoul(ck.meta.at("expansion"));
    vc.conv_kernel = std::stoul(ck.meta.at("conv_kernel"));
    vc.mamba_blocks = std::stoul(ck.meta.at("mamba_blocks"));
    std::uint64_t seed = ck.meta.count("seed") ? std::stoull(ck.meta.at("seed")) : 0;
    auto net = std::make_unique<rl::ValueNet>(vc, seed);
    ck.load_params(net->params());
    if (out_ck) *out_ck = std::move(ck);
    return net;
}

struct CommonOpts {
    std::string config_path;
    std::string checkpoint;
    std::string out_dir = "runs";
    std::string policy = "camrl";
    std::vector<std::string> envs;
    std::string crowd_model = "both";
    int cases = 50;
    std::int64_t seed = -1;  // -1: take from config
};

cfg::Config load_config_or_empty(const std::string& path) {
    if (path.empty()) return cfg::Config::parse_string("");
    return cfg::Config::parse_file(path);
}

void write_header(std::ostream& os, const cfg::Config& c, std::uint64_t seed,
                  const std::string& extra_key = "", const std::string& extra_val = "") {
    json h{{"record", "header"}, {"config_hash", c.hash_hex()}, {"seed", seed}};
    if (!extra_key.empty()) h[extra_key] = extra_val;
    os << h.dump() << "\n";
}

int cmd_train(const CommonOpts& opts) {
    cfg::Config c = load_config_or_empty(opts.config_path);
    auto unknown = c.unknown_keys(allowed_keys());
    if (!unknown.empty()) {
        std::cerr << "error: unknown config keys:";
        for (const auto& k : unknown) std::cerr << " " << k;
        std::cerr << "\n";
        return kConfigError;
    }
    if (opts.seed >= 0) c.set("seed", std::to_string(opts.seed));
    sim::SimParams sp = build_sim_params(c);
    reward::RewardConfig rc = build_reward(c, sp);
    rl::TrainConfig tc = build_train(c);
    rl::ValueNetConfig vc = build_vnet(c, opts.policy);

    fs::create_directories(opts.out_dir);
    std::string ckpt_path = (fs::path(opts.out_dir) / (rl::encoder_name(vc.encoder) + ".ckpt")).string();
    std::size_t checkpoint_every = static_cast<std::size_t>(c.get_int("checkpoint_every", 100));

    rl::ValueNet net(vc, tc.seed);
    rl::Trainer trainer(net, tc, sp, rc);

    bool il_done = false;
    std::size_t episodes_done = 0;
    if (!opts.checkpoint.empty()) {
        num::Checkpoint ck = num::load_checkpoint(opts.checkpoint);
        if (ck.meta.count("config_hash") && ck.meta.at("config_hash") != c.hash_hex()) {
            std::cerr << "error: checkpoint was produced by a different config ("
                      << ck.meta.at("config_hash") << " vs " << c.hash_hex() << ")\n";
            return kConfigError;
        }
        ck.load_params(net.params());
        trainer.target_net().copy_weights_from(net);
        if (ck.meta.count("adam_t")) {
            std::map<std::string, num::Array> adam_state;
            for (auto& [k, arr] : ck.arrays)
                if (k.rfind("adam.", 0) == 0) adam_state[k] = arr;
            trainer.optimizer().import_state(adam_state, std::stoull(ck.meta.at("adam_t")));
        }
        il_done = ck.meta.count("phase") && ck.meta.at("phase") != "init";
        if (ck.meta.count("episodes_done")) episodes_done = std::stoull(ck.meta.at("episodes_done"));
        std::cout << "resumed from " << opts.checkpoint << " (phase="
                  << (ck.meta.count("phase") ? ck.meta.at("phase") : "init")
                  << ", episodes_done=" << episodes_done << ")\n";
    }

    std::ofstream log_file((fs::path(opts.out_dir) / "train_log.jsonl").string(),
                           episodes_done > 0 || il_done ? std::ios::app : std::ios::trunc);
    if (!(episodes_done > 0 || il_done)) write_header(log_file, c, tc.seed, "mode", "train");
    auto log = [&](const rl::EpisodeLog& e) {
        json j{{"record", "episode"}, {"phase", e.phase},   {"episode", e.episode},
               {"outcome", e.outcome}, {"return", e.cumulative_reward}, {"eps", e.epsilon},
               {"loss", e.loss},       {"steps", e.steps},  {"elapsed", e.elapsed}};
        log_file << j.dump() << "\n";
        log_file.flush();
        if (e.phase == "il-epoch") {
            std::cout << "il epoch " << e.episode << " loss " << e.loss << "\n";
        } else if (e.phase == "val") {
            std::cout << "val @ episode " << e.episode + 1 << ": success " << e.cumulative_reward
                      << "\n";
        } else if (e.phase == "rl" && (e.episode + 1) % 50 == 0) {
            std::cout << "rl episode " << e.episode + 1 << " outcome " << e.outcome << " eps "
                      << e.epsilon << " loss " << e.loss << "\n";
        }
    };

    auto save = [&](const std::string& phase, std::size_t done) {
        save_net(ckpt_path, net, &trainer.optimizer(),
                 {{"phase", phase},
                  {"episodes_done", std::to_string(done)},
                  {"config_hash", c.hash_hex()},
                  {"seed", std::to_string(tc.seed)}});
    };

    if (!il_done && tc.il_episodes > 0 && tc.il_epochs > 0) {
        std::cout << "imitation learning: " << tc.il_episodes << " demos, " << tc.il_epochs
                  << " epochs\n";
        trainer.imitation_learn(tc.il_episodes, tc.il_epochs, log);
        save("il_done", 0);
        std::cout << "imitation learning done; checkpoint " << ckpt_path << "\n";
    }
    if (tc.rl_episodes > episodes_done) {
        std::cout << "reinforcement learning: episodes " << episodes_done << ".." << tc.rl_episodes
                  << "\n";
        std::size_t next = episodes_done;
        while (next < tc.rl_episodes) {
            std::size_t chunk = std::min(checkpoint_every, tc.rl_episodes - next);
            trainer.rl_train(next + chunk, next, log);
            next += chunk;
            save("rl", next);
        }
    }
    save("done", tc.rl_episodes);
    std::cout << "training complete; checkpoint " << ckpt_path << "\n";
    return kOk;
}

eval::PolicyFactory make_factory(const std::string& policy, const rl::ValueNet* net,
                                 const sim::SimParams& sp, const reward::RewardConfig& rc,
                                 const rl::TrainConfig& tc) {
    if (policy == "orca") {
        return [sp]() { return std::make_unique<sim::OrcaRobotPolicy>(sp); };
    }
    rl::LookaheadConfig lc = tc.lookahead(rc, sp);
    return [net, lc]() { return std::make_unique<rl::ValuePolicy>(*net, lc, 0.0, Rng(0)); };
}

int cmd_evaluate(const CommonOpts& opts) {
    cfg::Config c = load_config_or_empty(opts.config_path);
    sim::SimParams sp = build_sim_params(c);
    reward::RewardConfig rc = build_reward(c, sp);
    rl::TrainConfig tc = build_train(c);

    std::unique_ptr<rl::ValueNet> net;
    std::string policy = opts.policy;
    if (policy != "orca") {
        if (opts.checkpoint.empty()) {
            std::cerr << "error: --checkpoint is required for policy " << policy << "\n";
            return kConfigError;
        }
        net = load_net(opts.checkpoint);
        policy = rl::encoder_name(net->config().encoder);
    }

    std::vector<std::string> envs = opts.envs.empty() ? eval::kAllEnvironments : opts.envs;
    std::vector<sim::CrowdModel> cms;
    if (opts.crowd_model == "both") {
        cms = {sim::CrowdModel::Orca, sim::CrowdModel::Sfm};
    } else {
        cms = {sim::crowd_model_from_name(opts.crowd_model)};
    }

    int workers = eval::default_worker_count();
    auto cells = eval::run_suite(make_factory(policy, net.get(), sp, rc, tc), envs, cms, opts.cases,
                                 sp, rc, workers);

    fs::create_directories(opts.out_dir);
    std::uint64_t seed = opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : tc.seed;
    std::ofstream results((fs::path(opts.out_dir) / ("results_" + policy + ".jsonl")).string());
    write_header(results, c, seed, "policy", policy);
    for (const auto& cell : cells) {
        json episodes = json::array();
        for (const auto& e : cell.episodes) {
            episodes.push_back(json{{"seed", e.seed},
                                    {"result", e.result},
                                    {"elapsed", e.elapsed},
                                    {"steps", e.steps},
                                    {"return", e.cumulative_reward}});
        }
        json rec{{"record", "cell"},
                 {"policy", policy},
                 {"env", cell.env},
                 {"crowd_model", sim::crowd_model_name(cell.crowd)},
                 {"episodes", episodes},
                 {"generation_failures", cell.generation_failures},
                 {"success", cell.metrics.success_rate()},
                 {"collision", cell.metrics.collision_rate()},
                 {"timeout", cell.metrics.timeout_rate()},
                 {"nav_time_mean", cell.metrics.nav_time_mean()},
                 {"nav_time_std", cell.metrics.nav_time_std()},
                 {"discomfort_freq", cell.metrics.discomfort_frequency()},
                 {"disc_dist_mean", cell.metrics.discomfort_distance_mean()},
                 {"disc_dist_std", cell.metrics.discomfort_distance_std()},
                 {"n_episodes", cell.metrics.episodes}};
        results << rec.dump() << "\n";
    }
    eval::MetricsRecord pooled = eval::pool_cells(cells);
    std::vector<eval::TableRow> rows{{policy, pooled}};
    json pooled_rec{{"record", "pooled"}, {"policy", policy}, {"table", json::parse(eval::render_table_json(rows))}};
    results << pooled_rec.dump() << "\n";

    std::ofstream table_json((fs::path(opts.out_dir) / ("table_" + policy + ".json")).string());
    table_json << eval::render_table_json(rows);
    std::string text = eval::render_table_text(rows);
    std::ofstream table_txt((fs::path(opts.out_dir) / ("table_" + policy + ".txt")).string());
    table_txt << text;
    std::cout << text;
    std::cout << "episodes: " << pooled.episodes << " (results in " << opts.out_dir << ")\n";
    return kOk;
}

int cmd_rollout(const CommonOpts& opts) {
    cfg::Config c = load_config_or_empty(opts.config_path);
    sim::SimParams sp = build_sim_params(c);
    reward::RewardConfig rc = build_reward(c, sp);
    rl::TrainConfig tc = build_train(c);

    std::unique_ptr<rl::ValueNet> net;
    std::string policy = opts.policy;
    if (policy != "orca") {
        if (opts.checkpoint.empty()) {
            std::cerr << "error: --checkpoint is required for policy " << policy << "\n";
            return kConfigError;
        }
        net = load_net(opts.checkpoint);
        policy = rl::encoder_name(net->config().encoder);
    }
    std::string env = opts.envs.empty() ? "baseline-circle" : opts.envs.front();
    std::string cm = opts.crowd_model == "both" ? "orca" : opts.crowd_model;
    std::uint64_t seed = opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : 0;

    sim::ScenarioConfig scfg = sim::ScenarioConfig::from_name(env, sim::crowd_model_from_name(cm), seed);
    auto run = [&](sim::RobotPolicy& p) { return sim::run_episode(scfg, sp, rc, p); };
    sim::EpisodeOutcome ep;
    if (net) {
        rl::ValuePolicy p(*net, tc.lookahead(rc, sp), 0.0, Rng(0));
        ep = run(p);
    } else {
        sim::OrcaRobotPolicy p(sp);
        ep = run(p);
    }

    fs::create_directories(opts.out_dir);
    std::string path = (fs::path(opts.out_dir) / ("rollout_" + policy + "_" + env + "_" + cm + "_" +
                                                  std::to_string(seed) + ".jsonl"))
                           .string();
    std::ofstream os(path);
    simlog::write_trajectory_log(os, ep, policy, c.hash_hex(), seed);
    std::cout << "rollout " << sim::termination_name(ep.result) << " in " << ep.elapsed << " s, "
              << ep.trajectory.size() << " steps -> " << path << "\n";
    return kOk;
}

int cmd_verify(const std::string& suite_filter) {
    auto results = verify::verify_all();
    bool all_pass = true;
    for (const auto& r : results) {
        if (!suite_filter.empty() && r.name != suite_filter) continue;
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  max_err=" << r.max_err
                  << " tol=" << r.tolerance;
        if (!r.pass) std::cout << "  " << r.detail;
        std::cout << "\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kOk : kVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAMRL social navigation: training, evaluation and verification"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string suite_filter;

    auto add_common = [&](CLI::App* sub, bool with_eval_flags) {
        sub->add_option("--config", opts.config_path, "flat key=value config file");
        sub->add_option("--seed", opts.seed, "root seed (overrides config)");
        sub->add_option("--checkpoint", opts.checkpoint, "checkpoint path");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--policy", opts.policy, "policy: camrl | cadrl-mlp | lstm-rl | orca");
        if (with_eval_flags) {
            sub->add_option("--envs", opts.envs,
                            "environments (default: all six)")->delimiter(',');
            sub->add_option("--cases", opts.cases, "test cases per environment");
            sub->add_option("--crowd-model", opts.crowd_model, "orca | sfm | both");
        }
    };

    CLI::App* train = app.add_subcommand("train", "imitation learning followed by RL");
    add_common(train, false);
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the test protocol from a checkpoint");
    add_common(evaluate, true);
    CLI::App* rollout = app.add_subcommand("rollout", "log a single seeded episode");
    add_common(rollout, true);
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
    verify->add_option("--suite", suite_filter, "run a single named suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(opts);
        if (evaluate->parsed()) return cmd_evaluate(opts);
        if (rollout->parsed()) return cmd_rollout(opts);
        if (verify->parsed()) return cmd_verify(suite_filter);
    } catch (const cfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
