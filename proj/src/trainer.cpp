#include "camrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camrl::rl {

double TrainConfig::epsilon_at(std::size_t episode) const {
    std::size_t decay_len = static_cast<std::size_t>(eps_decay_fraction * static_cast<double>(rl_episodes));
    if (decay_len == 0 || episode >= decay_len) return eps_end;
    double f = static_cast<double>(episode) / static_cast<double>(decay_len);
    return eps_start + f * (eps_end - eps_start);
}

LookaheadConfig TrainConfig::lookahead(const reward::RewardConfig& rc,
                                       const sim::SimParams& sp) const {
    LookaheadConfig lc;
    lc.dt = sp.dt;
    lc.gamma = gamma;
    lc.discount_paper_mode = discount_paper_mode;
    lc.goal_tolerance = sp.goal_tolerance;
    lc.reward = rc;
    return lc;
}

void ReplayBuffer::push(ReplayEntry e) {
    entries_.push_back(std::move(e));
    while (entries_.size() > capacity_) entries_.pop_front();
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) idx[i] = rng.uniform_index(entries_.size());
    return idx;
}

std::vector<double> assemble_target_values(const std::vector<double>& rewards, double gamma_eff) {
    std::vector<double> y(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma_eff * acc;
        y[i] = acc;
    }
    return y;
}

std::vector<sim::JointState> episode_states(const sim::EpisodeOutcome& episode) {
    std::vector<sim::JointState> states;
    states.reserve(episode.trajectory.size() + 1);
    states.push_back(episode.initial_state);
    for (const auto& step : episode.trajectory) states.push_back(step.state);
    return states;
}

std::vector<ReplayEntry> episode_to_entries(const sim::EpisodeOutcome& episode,
                                            const std::vector<double>& step_values, std::size_t T) {
    std::vector<sim::JointState> states = episode_states(episode);
    std::size_t steps = episode.trajectory.size();
    if (step_values.size() != steps) {
        throw std::invalid_argument("episode_to_entries: one value per decision step required");
    }
    std::vector<ReplayEntry> out;
    out.reserve(steps);
    std::vector<sim::JointState> history;
    for (std::size_t k = 0; k < steps; ++k) {
        history.assign(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(k + 1));
        ReplayEntry e;
        e.window = make_window(history, T);
        e.target.resize(T + 1);
        for (std::size_t j = 0; j <= T; ++j) {
            // window position j corresponds to step k - T + j, clamped to 0
            std::ptrdiff_t step_idx = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(T) +
                                      static_cast<std::ptrdiff_t>(j);
            e.target[j] = step_values[static_cast<std::size_t>(std::max<std::ptrdiff_t>(step_idx, 0))];
        }
        out.push_back(std::move(e));
    }
    return out;
}

Trainer::Trainer(ValueNet& net, const TrainConfig& cfg, const sim::SimParams& sp,
                 const reward::RewardConfig& rc)
    : net_(net),
      target_(net.config(), cfg.seed),
      cfg_(cfg),
      sp_(sp),
      rc_(rc),
      adam_(num::AdamConfig{.lr = cfg.lr}),
      buffer_(cfg.buffer_capacity) {
    target_.copy_weights_from(net_);
}

sim::EpisodeOutcome Trainer::rollout(std::uint64_t scenario_seed, double epsilon, Rng explore) {
    sim::ScenarioConfig scfg = sim::ScenarioConfig::from_name(cfg_.env, cfg_.crowd, scenario_seed);
    ValuePolicy policy(net_, cfg_.lookahead(rc_, sp_), epsilon, explore);
    return sim::run_episode(scfg, sp_, rc_, policy);
}

double Trainer::train_batches(std::size_t count, Rng& rng) {
    double total = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
        std::vector<std::size_t> idx = buffer_.sample_indices(cfg_.batch_size, rng);
        num::Tape tape;
        num::Tensor loss;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const ReplayEntry& e = buffer_.at(idx[i]);
            num::Tensor pred = net_.value_forward(tape, e.window);
            num::Tensor target = tape.constant(num::Array::vector(e.target));
            num::Tensor l = num::mse_loss(pred, target);
            loss = (i == 0) ? l : num::add(loss, l);
        }
        loss = num::affine(loss, 1.0 / static_cast<double>(idx.size()), 0.0);
        net_.params().zero_grad();
        tape.backward(loss);
        adam_.step(net_.params());
        total += loss.value().data[0];
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
}

std::vector<double> Trainer::imitation_learn(std::size_t episodes, std::size_t epochs,
                                             std::function<void(const EpisodeLog&)> log) {
    if (episodes == 0) throw std::invalid_argument("imitation_learn: at least one demonstration needed");
    double gamma_eff = discount_factor(cfg_.lookahead(rc_, sp_), sp_.v_pref);

    std::vector<ReplayEntry> dataset;
    for (std::size_t i = 0; i < episodes; ++i) {
        sim::ScenarioConfig scfg =
            sim::ScenarioConfig::from_name(cfg_.env, cfg_.crowd, TrainConfig::kDemoSeedBase + i);
        sim::OrcaRobotPolicy expert(sp_, cfg_.il_safety_margin);
        sim::EpisodeOutcome ep;
        try {
            ep = sim::run_episode(scfg, sp_, rc_, expert);
        } catch (const sim::GenerationError&) {
            continue;
        }
        std::vector<double> rewards;
        rewards.reserve(ep.trajectory.size());
        for (const auto& s : ep.trajectory) rewards.push_back(s.reward);
        std::vector<double> y = assemble_target_values(rewards, gamma_eff);
        auto entries = episode_to_entries(ep, y, cfg_.window);
        for (auto& e : entries) dataset.push_back(std::move(e));
        if (log) {
            log({i, "il-demo", sim::termination_name(ep.result), ep.cumulative_reward, 0.0, 0.0,
                 ep.trajectory.size(), ep.elapsed});
        }
    }
    if (dataset.empty()) throw std::runtime_error("imitation_learn: demonstration set is empty");

    std::vector<double> epoch_losses;
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle = Rng::substream(cfg_.seed, "il-shuffle", epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = shuffle.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg_.batch_size);
            num::Tape tape;
            num::Tensor loss;
            for (std::size_t i = start; i < end; ++i) {
                const ReplayEntry& e = dataset[order[i]];
                num::Tensor pred = net_.value_forward(tape, e.window);
                num::Tensor target = tape.constant(num::Array::vector(e.target));
                num::Tensor l = num::mse_loss(pred, target);
                loss = (i == start) ? l : num::add(loss, l);
            }
            loss = num::affine(loss, 1.0 / static_cast<double>(end - start), 0.0);
            net_.params().zero_grad();
            tape.backward(loss);
            adam_.step(net_.params());
            total += loss.value().data[0];
            ++batches;
        }
        double mean = batches ? total / static_cast<double>(batches) : 0.0;
        epoch_losses.push_back(mean);
        if (log) log({epoch, "il-epoch", "epoch", 0.0, 0.0, mean, dataset.size(), 0.0});
    }
    target_.copy_weights_from(net_);
    return epoch_losses;
}

void Trainer::rl_train(std::size_t episodes, std::size_t start_episode,
                       std::function<void(const EpisodeLog&)> log) {
    double gamma_eff = discount_factor(cfg_.lookahead(rc_, sp_), sp_.v_pref);
    for (std::size_t e = start_episode; e < episodes; ++e) {
        double eps = cfg_.epsilon_at(e);
        sim::EpisodeOutcome ep;
        try {
            ep = rollout(TrainConfig::kTrainSeedBase + e, eps, Rng::substream(cfg_.seed, "explore", e));
        } catch (const sim::GenerationError&) {
            continue;
        }
        std::size_t steps = ep.trajectory.size();
        std::vector<sim::JointState> states = episode_states(ep);

        // Bootstrapped targets from the target network; pure reward at
        // termination.
        std::vector<double> y(steps, 0.0);
        std::vector<sim::JointState> history;
        for (std::size_t k = 0; k < steps; ++k) {
            double r = ep.trajectory[k].reward;
            if (k + 1 == steps) {
                y[k] = r;
            } else {
                history.assign(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(k + 2));
                TemporalCrowdState next_window = make_window(history, cfg_.window);
                y[k] = r + gamma_eff * target_.value_final(next_window);
            }
        }
        for (auto& entry : episode_to_entries(ep, y, cfg_.window)) buffer_.push(std::move(entry));

        double loss = 0.0;
        if (buffer_.size() >= cfg_.batch_size) {
            Rng sample = Rng::substream(cfg_.seed, "replay", e);
            loss = train_batches(cfg_.rl_train_batches, sample);
        }
        if ((e + 1) % cfg_.target_sync_interval == 0) target_.copy_weights_from(net_);
        if (log) {
            log({e, "rl", sim::termination_name(ep.result), ep.cumulative_reward, eps, loss, steps,
                 ep.elapsed});
        }
        if (cfg_.val_interval > 0 && (e + 1) % cfg_.val_interval == 0 && cfg_.val_episodes > 0) {
            double succ = evaluate_success(TrainConfig::kValSeedBase, cfg_.val_episodes);
            if (log) log({e, "val", "probe", succ, 0.0, 0.0, cfg_.val_episodes, 0.0});
        }
    }
}

double Trainer::evaluate_success(std::uint64_t seed_base, std::size_t episodes) {
    std::size_t wins = 0;
    for (std::size_t i = 0; i < episodes; ++i) {
        sim::ScenarioConfig scfg = sim::ScenarioConfig::from_name(cfg_.env, cfg_.crowd, seed_base + i);
        ValuePolicy policy(net_, cfg_.lookahead(rc_, sp_), 0.0, Rng(0));
        sim::EpisodeOutcome ep = sim::run_episode(scfg, sp_, rc_, policy);
        if (ep.result == sim::Termination::Success) ++wins;
    }
    return episodes ? static_cast<double>(wins) / static_cast<double>(episodes) : 0.0;
}

}  // namespace camrl::rl
