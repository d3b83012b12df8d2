#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "camrl/crowdsim.hpp"
#include "camrl/features.hpp"
#include "camrl/mamba.hpp"
#include "camrl/optim.hpp"
#include "camrl/reward.hpp"

namespace camrl::rl {

enum class EncoderKind { CamrlGru, LstmRl, CadrlMlp };
std::string encoder_name(EncoderKind k);
EncoderKind encoder_from_name(const std::string& s);

struct ValueNetConfig {
    EncoderKind encoder = EncoderKind::CamrlGru;
    std::size_t d_model = 64;
    std::size_t embed_dim = 64;
    std::size_t rnn_hidden = 64;
    std::size_t window = 8;  // T; a window holds T+1 joint states
    std::size_t ssm_state = 16;
    std::size_t expansion = 2;
    std::size_t conv_kernel = 4;
    std::size_t mamba_blocks = 4;
};

// Window of joint states s_{t-T..t}, oldest first, uniformly spaced.
struct TemporalCrowdState {
    std::vector<sim::JointState> states;
};

// Front-pads by repeating the earliest available state so a window is always
// T+1 long and every padded entry is a valid joint state.
TemporalCrowdState make_window(const std::vector<sim::JointState>& history, std::size_t T);

class ValueNet;
struct LookaheadConfig;

// The CAMRL value network: per-state crowd encoder -> 4-layer Mamba stack
// over the window -> linear head per position. Baseline encoder variants
// (CADRL-style MLP, LSTM-RL-style) skip the temporal stack and apply the head
// per position.
class ValueNet {
public:
    ValueNet(ValueNetConfig cfg, std::uint64_t init_seed);

    const ValueNetConfig& config() const { return cfg_; }
    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }

    // Differentiable pipeline; output shape (T+1). Non-const: watched
    // parameters receive gradient accumulation on backward.
    num::Tensor value_forward(num::Tape& tape, const TemporalCrowdState& window);
    num::Tensor encode_crowd(num::Tape& tape, const sim::JointState& joint);  // (d_model)

    // Tape-free evaluation path (matches the tape path to rounding).
    std::vector<double> values(const TemporalCrowdState& window) const;
    double value_final(const TemporalCrowdState& window) const;
    std::vector<double> encode_crowd_raw(const sim::JointState& joint) const;

    void copy_weights_from(const ValueNet& other);

private:
    friend Vec2 select_action(const ValueNet&, const TemporalCrowdState&, double,
                              const std::vector<Vec2>&, const LookaheadConfig&, Rng&, double);
    std::vector<double> head_raw(const std::vector<double>& latent) const;
    num::Tensor rnn_encode(num::Tape& tape, const StateFeatures& f);
    num::Tensor mlp_encode(num::Tape& tape, const StateFeatures& f);

    ValueNetConfig cfg_;
    num::ParamStore params_;
    ssm::MambaStackParams mamba_;
    bool has_mamba_ = false;
};

// ---- one-step lookahead ----

std::vector<Vec2> build_action_space(double v_pref);

// Robot advances by the commanded velocity; humans continue at constant
// velocity.
sim::JointState propagate(const sim::JointState& joint, const Vec2& action, double dt);

struct LookaheadConfig {
    double dt = 0.25;
    double gamma = 0.9;
    bool discount_paper_mode = false;  // gamma^dt instead of gamma^(dt*v_pref)
    double goal_tolerance = 0.3;
    reward::RewardConfig reward;
};

double discount_factor(const LookaheadConfig& cfg, double v_pref);

// Scores every action as R(s,a) + gamma_eff * V(shifted window) and returns
// the argmax (lowest index wins ties). With probability epsilon returns a
// uniformly random action instead.
Vec2 select_action(const ValueNet& net, const TemporalCrowdState& window, double epsilon,
                   const std::vector<Vec2>& action_space, const LookaheadConfig& cfg, Rng& rng,
                   double current_time);

// Value-network robot policy: maintains the state history and selects actions
// by one-step lookahead.
class ValuePolicy : public sim::RobotPolicy {
public:
    ValuePolicy(const ValueNet& net, LookaheadConfig cfg, double epsilon, Rng explore_rng);
    void reset() override;
    Vec2 act(const sim::JointState& s, double time) override;
    std::string name() const override { return encoder_name(net_->config().encoder); }

private:
    const ValueNet* net_;
    LookaheadConfig cfg_;
    double epsilon_;
    Rng rng_;
    std::vector<Vec2> actions_;
    std::vector<sim::JointState> history_;
};

}  // namespace camrl::rl
