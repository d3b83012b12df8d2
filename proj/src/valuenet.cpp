#include "camrl/valuenet.hpp"

#include <cmath>
#include <stdexcept>

#include "camrl/scalar_ops.hpp"

namespace camrl::rl {

using num::Array;
using num::Tape;
using num::Tensor;

std::string encoder_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::CamrlGru: return "camrl";
        case EncoderKind::LstmRl: return "lstm-rl";
        case EncoderKind::CadrlMlp: return "cadrl-mlp";
    }
    return "?";
}

EncoderKind encoder_from_name(const std::string& s) {
    if (s == "camrl" || s == "camrl-gru") return EncoderKind::CamrlGru;
    if (s == "lstm-rl" || s == "lstmrl") return EncoderKind::LstmRl;
    if (s == "cadrl-mlp" || s == "cadrl") return EncoderKind::CadrlMlp;
    throw std::invalid_argument("unknown encoder: " + s);
}

TemporalCrowdState make_window(const std::vector<sim::JointState>& history, std::size_t T) {
    if (history.empty()) throw std::invalid_argument("make_window: empty history");
    TemporalCrowdState w;
    w.states.reserve(T + 1);
    std::size_t n = history.size();
    std::size_t take = std::min(n, T + 1);
    for (std::size_t i = 0; i < T + 1 - take; ++i) w.states.push_back(history[0]);
    for (std::size_t i = n - take; i < n; ++i) w.states.push_back(history[i]);
    return w;
}

namespace {

Array uniform_init(num::Shape shape, double scale, Rng& rng) {
    Array w(std::move(shape));
    for (double& v : w.data) v = rng.uniform(-scale, scale);
    return w;
}

Array fan_in_init(std::size_t rows, std::size_t cols, Rng& rng) {
    return uniform_init({rows, cols}, std::sqrt(1.0 / static_cast<double>(rows)), rng);
}

// row vector (1,k) . W (k,n) + b, accumulating in gemm order
void dot_row(const std::vector<double>& x, const Array& w, const Array& b, std::vector<double>& out) {
    std::size_t k = w.shape[0], n = w.shape[1];
    out.assign(n, 0.0);
    if (b.numel() == n) {
        for (std::size_t j = 0; j < n; ++j) out[j] = b.data[j];
    }
    for (std::size_t p = 0; p < k; ++p) {
        double v = x[p];
        if (v == 0.0) continue;
        const double* wrow = w.data.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += v * wrow[j];
    }
}

}  // namespace

ValueNet::ValueNet(ValueNetConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    Rng rng = Rng::substream(init_seed, "init");
    std::size_t dm = cfg_.d_model, e = cfg_.embed_dim, h = cfg_.rnn_hidden;

    switch (cfg_.encoder) {
        case EncoderKind::CamrlGru: {
            params_.create("enc.embed_w", fan_in_init(kHumanFeatureDim, e, rng));
            params_.create("enc.embed_b", Array({e}, 0.0));
            for (const char* gate : {"z", "r", "n"}) {
                params_.create(std::string("enc.gru.wx") + gate, fan_in_init(e, h, rng));
                params_.create(std::string("enc.gru.wh") + gate, fan_in_init(h, h, rng));
                params_.create(std::string("enc.gru.b") + gate, Array({h}, 0.0));
            }
            params_.create("enc.proj_w", fan_in_init(h + kRobotFeatureDim, dm, rng));
            params_.create("enc.proj_b", Array({dm}, 0.0));
            ssm::MambaStackConfig mc;
            mc.d_model = dm;
            mc.ssm_state = cfg_.ssm_state;
            mc.expansion = cfg_.expansion;
            mc.conv_kernel = cfg_.conv_kernel;
            mc.blocks = cfg_.mamba_blocks;
            mamba_ = ssm::MambaStackParams::create(params_, "mamba", mc, rng);
            has_mamba_ = true;
            break;
        }
        case EncoderKind::LstmRl: {
            params_.create("enc.embed_w", fan_in_init(kHumanFeatureDim, e, rng));
            params_.create("enc.embed_b", Array({e}, 0.0));
            for (const char* gate : {"i", "f", "g", "o"}) {
                params_.create(std::string("enc.lstm.wx") + gate, fan_in_init(e, h, rng));
                params_.create(std::string("enc.lstm.wh") + gate, fan_in_init(h, h, rng));
                params_.create(std::string("enc.lstm.b") + gate, Array({h}, 0.0));
            }
            params_.create("enc.proj_w", fan_in_init(h + kRobotFeatureDim, dm, rng));
            params_.create("enc.proj_b", Array({dm}, 0.0));
            break;
        }
        case EncoderKind::CadrlMlp: {
            std::size_t in = kRobotFeatureDim + kHumanFeatureDim;
            params_.create("enc.fc1_w", fan_in_init(in, e, rng));
            params_.create("enc.fc1_b", Array({e}, 0.0));
            params_.create("enc.fc2_w", fan_in_init(e, dm, rng));
            params_.create("enc.fc2_b", Array({dm}, 0.0));
            break;
        }
    }
    params_.create("head_w", fan_in_init(dm, 1, rng));
    params_.create("head_b", Array({1}, 0.0));
}

void ValueNet::copy_weights_from(const ValueNet& other) { params_.copy_values_from(other.params_); }

// ---- tape path ----

Tensor ValueNet::rnn_encode(Tape& tape, const StateFeatures& f) {
    bool gru = cfg_.encoder == EncoderKind::CamrlGru;
    std::size_t h = cfg_.rnn_hidden;
    Tensor embed_w = tape.watch(params_.get("enc.embed_w"));
    Tensor embed_b = tape.watch(params_.get("enc.embed_b"));

    Tensor hidden = tape.constant(Array({1, h}, 0.0));
    Tensor cell = gru ? Tensor{} : tape.constant(Array({1, h}, 0.0));

    auto rows = sort_human_rows(f.humans);
    for (const auto& row : rows) {
        Tensor x = tape.constant(Array({1, kHumanFeatureDim}, row));
        Tensor xe = num::add(num::matmul(x, embed_w), embed_b);
        if (gru) {
            Tensor z = num::sigmoid(num::add(
                num::add(num::matmul(xe, tape.watch(params_.get("enc.gru.wxz"))),
                         num::matmul(hidden, tape.watch(params_.get("enc.gru.whz")))),
                tape.watch(params_.get("enc.gru.bz"))));
            Tensor r = num::sigmoid(num::add(
                num::add(num::matmul(xe, tape.watch(params_.get("enc.gru.wxr"))),
                         num::matmul(hidden, tape.watch(params_.get("enc.gru.whr")))),
                tape.watch(params_.get("enc.gru.br"))));
            Tensor n = num::tanh_op(num::add(
                num::add(num::matmul(xe, tape.watch(params_.get("enc.gru.wxn"))),
                         num::matmul(num::mul(r, hidden), tape.watch(params_.get("enc.gru.whn")))),
                tape.watch(params_.get("enc.gru.bn"))));
            // h' = z h + (1 - z) n
            hidden = num::add(num::mul(z, hidden), num::mul(num::affine(z, -1.0, 1.0), n));
        } else {
            auto gate = [&](const char* g) {
                return num::add(
                    num::add(num::matmul(xe, tape.watch(params_.get(std::string("enc.lstm.wx") + g))),
                             num::matmul(hidden, tape.watch(params_.get(std::string("enc.lstm.wh") + g)))),
                    tape.watch(params_.get(std::string("enc.lstm.b") + g)));
            };
            Tensor i = num::sigmoid(gate("i"));
            Tensor fg = num::sigmoid(gate("f"));
            Tensor g = num::tanh_op(gate("g"));
            Tensor o = num::sigmoid(gate("o"));
            cell = num::add(num::mul(fg, cell), num::mul(i, g));
            hidden = num::mul(o, num::tanh_op(cell));
        }
    }
    Tensor robot_row = tape.constant(Array({1, kRobotFeatureDim}, f.robot));
    Tensor cat = num::concat_last(hidden, robot_row);
    Tensor latent = num::add(num::matmul(cat, tape.watch(params_.get("enc.proj_w"))),
                             tape.watch(params_.get("enc.proj_b")));
    if (!gru) latent = num::tanh_op(latent);  // baseline heads are linear; keep a bounded latent
    return num::reshape(latent, {cfg_.d_model});
}

Tensor ValueNet::mlp_encode(Tape& tape, const StateFeatures& f) {
    std::vector<double> in = f.robot;
    std::vector<double> nearest(kHumanFeatureDim, 0.0);
    if (!f.humans.empty()) {
        auto rows = sort_human_rows(f.humans);
        nearest = rows.back();  // smallest distance after descending sort
    }
    in.insert(in.end(), nearest.begin(), nearest.end());
    Tensor x = tape.constant(Array({1, in.size()}, in));
    Tensor h1 = num::tanh_op(num::add(num::matmul(x, tape.watch(params_.get("enc.fc1_w"))),
                                      tape.watch(params_.get("enc.fc1_b"))));
    Tensor h2 = num::tanh_op(num::add(num::matmul(h1, tape.watch(params_.get("enc.fc2_w"))),
                                      tape.watch(params_.get("enc.fc2_b"))));
    return num::reshape(h2, {cfg_.d_model});
}

Tensor ValueNet::encode_crowd(Tape& tape, const sim::JointState& joint) {
    StateFeatures f = transform_state(joint);
    if (cfg_.encoder == EncoderKind::CadrlMlp) return mlp_encode(tape, f);
    return rnn_encode(tape, f);
}

Tensor ValueNet::value_forward(Tape& tape, const TemporalCrowdState& window) {
    if (window.states.empty()) throw std::invalid_argument("value_forward: empty window");
    std::size_t L = window.states.size();
    std::vector<Tensor> latents;
    latents.reserve(L);
    for (const auto& s : window.states) latents.push_back(encode_crowd(tape, s));
    Tensor seq = num::stack_rows(latents);  // (L, d_model)
    if (has_mamba_) {
        seq = num::reshape(seq, {1, L, cfg_.d_model});
        seq = ssm::mamba_stack(tape, mamba_, seq);
        seq = num::reshape(seq, {L, cfg_.d_model});
    }
    Tensor head = num::add(num::matmul(seq, tape.watch(params_.get("head_w"))),
                           tape.watch(params_.get("head_b")));  // (L, 1)
    return num::reshape(head, {L});
}

// ---- raw (tape-free) path ----

std::vector<double> ValueNet::encode_crowd_raw(const sim::JointState& joint) const {
    StateFeatures f = transform_state(joint);
    std::size_t h = cfg_.rnn_hidden;
    std::vector<double> latent;

    if (cfg_.encoder == EncoderKind::CadrlMlp) {
        std::vector<double> in = f.robot;
        std::vector<double> nearest(kHumanFeatureDim, 0.0);
        if (!f.humans.empty()) {
            auto rows = sort_human_rows(f.humans);
            nearest = rows.back();
        }
        in.insert(in.end(), nearest.begin(), nearest.end());
        std::vector<double> h1, h2;
        dot_row(in, params_.get("enc.fc1_w").value, params_.get("enc.fc1_b").value, h1);
        for (double& v : h1) v = std::tanh(v);
        dot_row(h1, params_.get("enc.fc2_w").value, params_.get("enc.fc2_b").value, h2);
        for (double& v : h2) v = std::tanh(v);
        return h2;
    }

    bool gru = cfg_.encoder == EncoderKind::CamrlGru;
    std::vector<double> hidden(h, 0.0), cell(h, 0.0);
    std::vector<double> xe;
    auto rows = sort_human_rows(f.humans);
    const Array& embed_w = params_.get("enc.embed_w").value;
    const Array& embed_b = params_.get("enc.embed_b").value;
    for (const auto& row : rows) {
        dot_row(row, embed_w, embed_b, xe);
        auto gate_pre = [&](const std::string& wx, const std::string& wh, const std::string& b,
                            std::vector<double>& out) {
            dot_row(xe, params_.get(wx).value, params_.get(b).value, out);
            const Array& whv = params_.get(wh).value;
            for (std::size_t p = 0; p < h; ++p) {
                double v = hidden[p];
                if (v == 0.0) continue;
                const double* wrow = whv.data.data() + p * h;
                for (std::size_t j = 0; j < h; ++j) out[j] += v * wrow[j];
            }
        };
        if (gru) {
            std::vector<double> z, r, n;
            gate_pre("enc.gru.wxz", "enc.gru.whz", "enc.gru.bz", z);
            gate_pre("enc.gru.wxr", "enc.gru.whr", "enc.gru.br", r);
            for (double& v : z) v = num::stable_sigmoid(v);
            for (double& v : r) v = num::stable_sigmoid(v);
            // n uses r (.) hidden as the recurrent input
            dot_row(xe, params_.get("enc.gru.wxn").value, params_.get("enc.gru.bn").value, n);
            const Array& whn = params_.get("enc.gru.whn").value;
            for (std::size_t p = 0; p < h; ++p) {
                double v = r[p] * hidden[p];
                if (v == 0.0) continue;
                const double* wrow = whn.data.data() + p * h;
                for (std::size_t j = 0; j < h; ++j) n[j] += v * wrow[j];
            }
            for (double& v : n) v = std::tanh(v);
            for (std::size_t j = 0; j < h; ++j) hidden[j] = z[j] * hidden[j] + (1.0 - z[j]) * n[j];
        } else {
            std::vector<double> i, fg, g, o;
            gate_pre("enc.lstm.wxi", "enc.lstm.whi", "enc.lstm.bi", i);
            gate_pre("enc.lstm.wxf", "enc.lstm.whf", "enc.lstm.bf", fg);
            gate_pre("enc.lstm.wxg", "enc.lstm.whg", "enc.lstm.bg", g);
            gate_pre("enc.lstm.wxo", "enc.lstm.who", "enc.lstm.bo", o);
            for (std::size_t j = 0; j < h; ++j) {
                double iv = num::stable_sigmoid(i[j]);
                double fv = num::stable_sigmoid(fg[j]);
                double gv = std::tanh(g[j]);
                double ov = num::stable_sigmoid(o[j]);
                cell[j] = fv * cell[j] + iv * gv;
                hidden[j] = ov * std::tanh(cell[j]);
            }
        }
    }
    std::vector<double> cat = hidden;
    cat.insert(cat.end(), f.robot.begin(), f.robot.end());
    dot_row(cat, params_.get("enc.proj_w").value, params_.get("enc.proj_b").value, latent);
    if (!gru) {
        for (double& v : latent) v = std::tanh(v);
    }
    return latent;
}

std::vector<double> ValueNet::head_raw(const std::vector<double>& latent) const {
    std::vector<double> out;
    dot_row(latent, params_.get("head_w").value, params_.get("head_b").value, out);
    return out;
}

std::vector<double> ValueNet::values(const TemporalCrowdState& window) const {
    if (window.states.empty()) throw std::invalid_argument("values: empty window");
    std::vector<double> out;
    out.reserve(window.states.size());
    if (has_mamba_) {
        ssm::MambaStepState st = ssm::MambaStepState::initial(mamba_);
        for (const auto& s : window.states) {
            std::vector<double> latent = encode_crowd_raw(s);
            latent = ssm::mamba_stack_step(mamba_, st, latent);
            out.push_back(head_raw(latent)[0]);
        }
    } else {
        for (const auto& s : window.states) out.push_back(head_raw(encode_crowd_raw(s))[0]);
    }
    return out;
}

double ValueNet::value_final(const TemporalCrowdState& window) const {
    return values(window).back();
}

// ---- lookahead ----

std::vector<Vec2> build_action_space(double v_pref) {
    if (v_pref <= 0.0) throw std::invalid_argument("build_action_space: v_pref must be positive");
    std::vector<Vec2> actions;
    actions.reserve(81);
    actions.emplace_back(0.0, 0.0);
    for (int i = 1; i <= 5; ++i) {
        double speed = (std::exp(static_cast<double>(i) / 5.0) - 1.0) / (M_E - 1.0) * v_pref;
        for (int k = 0; k < 16; ++k) {
            double heading = 2.0 * M_PI * static_cast<double>(k) / 16.0;
            actions.emplace_back(speed * std::cos(heading), speed * std::sin(heading));
        }
    }
    return actions;
}

sim::JointState propagate(const sim::JointState& joint, const Vec2& action, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("propagate: dt must be positive");
    sim::JointState next = joint;
    next.robot.obs.p += action * dt;
    next.robot.obs.v = action;
    for (auto& h : next.humans) h.p += h.v * dt;
    return next;
}

double discount_factor(const LookaheadConfig& cfg, double v_pref) {
    double expo = cfg.discount_paper_mode ? cfg.dt : cfg.dt * v_pref;
    return std::pow(cfg.gamma, expo);
}

Vec2 select_action(const ValueNet& net, const TemporalCrowdState& window, double epsilon,
                   const std::vector<Vec2>& action_space, const LookaheadConfig& cfg, Rng& rng,
                   double current_time) {
    if (action_space.empty()) throw std::invalid_argument("select_action: empty action space");
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
        return action_space[rng.uniform_index(action_space.size())];
    }
    const sim::JointState& current = window.states.back();
    double gamma_eff = discount_factor(cfg, current.robot.hidden.v_pref);

    // Shared window prefix (all states but the oldest) fans out into one
    // appended candidate state per action.
    bool mamba = net.has_mamba_;
    ssm::MambaStepState prefix_state;
    if (mamba) {
        prefix_state = ssm::MambaStepState::initial(net.mamba_);
        for (std::size_t i = 1; i < window.states.size(); ++i) {
            std::vector<double> latent = net.encode_crowd_raw(window.states[i]);
            ssm::mamba_stack_step(net.mamba_, prefix_state, latent);
        }
    }

    double best_score = 0.0;
    std::size_t best_idx = 0;
    bool first = true;
    for (std::size_t idx = 0; idx < action_space.size(); ++idx) {
        sim::JointState next = propagate(current, action_space[idx], cfg.dt);
        std::vector<sim::ObservableState> humans = next.humans;
        double d = sim::separation_distance(next.robot.obs, humans);
        bool at_goal = distance(next.robot.obs.p, next.robot.hidden.goal) < cfg.goal_tolerance;
        double r = reward::compute_reward(d, at_goal, current_time + cfg.dt, cfg.reward);

        std::vector<double> latent = net.encode_crowd_raw(next);
        double v;
        if (mamba) {
            ssm::MambaStepState st = prefix_state;
            latent = ssm::mamba_stack_step(net.mamba_, st, latent);
            v = net.head_raw(latent)[0];
        } else {
            v = net.head_raw(latent)[0];
        }
        double score = r + gamma_eff * v;
        if (first || score > best_score) {
            best_score = score;
            best_idx = idx;
            first = false;
        }
    }
    return action_space[best_idx];
}

ValuePolicy::ValuePolicy(const ValueNet& net, LookaheadConfig cfg, double epsilon, Rng explore_rng)
    : net_(&net), cfg_(cfg), epsilon_(epsilon), rng_(explore_rng) {}

void ValuePolicy::reset() { history_.clear(); }

Vec2 ValuePolicy::act(const sim::JointState& s, double time) {
    history_.push_back(s);
    TemporalCrowdState window = make_window(history_, net_->config().window);
    actions_ = build_action_space(s.robot.hidden.v_pref);
    return select_action(*net_, window, epsilon_, actions_, cfg_, rng_, time);
}

}  // namespace camrl::rl
