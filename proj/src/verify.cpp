#include "camrl/verify.hpp"

#include <cmath>
#include <sstream>

#include "camrl/mamba.hpp"
#include "camrl/metrics.hpp"
#include "camrl/reward.hpp"
#include "camrl/trainer.hpp"
#include "camrl/valuenet.hpp"

namespace camrl::verify {

using num::Array;
using num::Tape;
using num::Tensor;

namespace {

double rel_err(double a, double b) {
    double denom = std::max({1e-12, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) / denom;
}

sim::JointState random_joint_state(Rng& rng, int humans) {
    sim::JointState s;
    s.robot.obs = {{rng.uniform(-4, 4), rng.uniform(-4, 4)},
                   {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                   0.3};
    s.robot.hidden = {{rng.uniform(-4, 4), rng.uniform(-4, 4)}, 1.0};
    for (int i = 0; i < humans; ++i) {
        s.humans.push_back({{rng.uniform(-4, 4), rng.uniform(-4, 4)},
                            {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                            0.3});
    }
    return s;
}

rl::TemporalCrowdState random_window(Rng& rng, std::size_t T, int humans) {
    std::vector<sim::JointState> hist;
    for (std::size_t i = 0; i <= T; ++i) hist.push_back(random_joint_state(rng, humans));
    return rl::make_window(hist, T);
}

}  // namespace

SuiteResult verify_zoh(const std::function<ssm::DiscreteLti(const ssm::LtiParams&)>& discretizer) {
    auto zoh = discretizer ? discretizer : [](const ssm::LtiParams& p) { return ssm::discretize_zoh(p); };
    struct Case {
        double a, b, delta, abar, bbar;
    };
    const Case cases[] = {
        {0.0, 1.0, 0.5, 1.0, 0.5},
        {-1.0, 1.0, 1.0, std::exp(-1.0), 1.0 - std::exp(-1.0)},
        {-2.0, 3.0, 0.1, std::exp(-0.2), (1.0 - std::exp(-0.2)) / 2.0 * 3.0},
        {-0.5, -2.0, 2.0, std::exp(-1.0), (std::exp(-1.0) - 1.0) / (-0.5) * (-2.0)},
    };
    SuiteResult res{.name = "zoh_closed_forms", .pass = true, .max_err = 0.0, .tolerance = 1e-12,
                    .detail = ""};
    for (const Case& c : cases) {
        ssm::LtiParams p{{c.a}, {c.b}, {1.0}, 0.0, c.delta};
        ssm::DiscreteLti d = zoh(p);
        double err = std::max(std::fabs(d.a_bar[0] - c.abar), std::fabs(d.b_bar[0] - c.bbar));
        res.max_err = std::max(res.max_err, err);
        if (err > res.tolerance) {
            res.pass = false;
            std::ostringstream os;
            os << "discretize_zoh mismatch at a=" << c.a << " b=" << c.b << " delta=" << c.delta
               << ": got (" << d.a_bar[0] << "," << d.b_bar[0] << ") expected (" << c.abar << ","
               << c.bbar << ")";
            res.detail = os.str();
        }
    }
    return res;
}

SuiteResult verify_ssm_equivalence(int n_systems, std::size_t len, std::uint64_t seed) {
    SuiteResult res{.name = "ssm_recurrent_vs_conv", .pass = true, .max_err = 0.0,
                    .tolerance = 1e-8, .detail = ""};
    Rng rng(seed);
    for (int k = 0; k < n_systems; ++k) {
        std::size_t n = 1 + rng.uniform_index(16);
        ssm::LtiParams p;
        for (std::size_t i = 0; i < n; ++i) {
            p.a_diag.push_back(-std::exp(rng.uniform(-2.0, 1.5)));  // stable
            p.b.push_back(rng.uniform(-1, 1));
            p.c.push_back(rng.uniform(-1, 1));
        }
        p.d = rng.uniform(-1, 1);
        p.delta = std::exp(rng.uniform(std::log(0.01), std::log(1.0)));
        ssm::DiscreteLti d = ssm::discretize_zoh(p);
        std::vector<double> u(len);
        for (double& v : u) v = rng.uniform(-1, 1);
        auto y_rec = ssm::ssm_recurrent(d, u);
        auto y_conv = ssm::ssm_conv_apply(ssm::ssm_conv_kernel(d, len), u, d.d);
        for (std::size_t t = 0; t < len; ++t) {
            double err = rel_err(y_rec[t], y_conv[t]);
            res.max_err = std::max(res.max_err, err);
            if (err > res.tolerance && res.pass) {
                res.pass = false;
                std::ostringstream os;
                os << "system " << k << " N=" << n << " delta=" << p.delta << " t=" << t
                   << ": recurrent " << y_rec[t] << " vs conv " << y_conv[t];
                res.detail = os.str();
            }
        }
    }
    return res;
}

SuiteResult verify_selective_degeneration(int n_cases, std::uint64_t seed) {
    SuiteResult res{.name = "selective_scan_lti_degeneration", .pass = true, .max_err = 0.0,
                    .tolerance = 1e-10, .detail = ""};
    Rng rng(seed);
    for (int k = 0; k < n_cases; ++k) {
        std::size_t B = 1 + rng.uniform_index(2), L = 1 + rng.uniform_index(24);
        std::size_t D = 1 + rng.uniform_index(3), N = 1 + rng.uniform_index(6);
        Array a({D, N}), brow({N}), crow({N}), dskip({D}), dconst({D});
        for (double& v : a.data) v = -std::exp(rng.uniform(-1.5, 1.0));
        for (double& v : brow.data) v = rng.uniform(-1, 1);
        for (double& v : crow.data) v = rng.uniform(-1, 1);
        for (double& v : dskip.data) v = rng.uniform(-1, 1);
        for (double& v : dconst.data) v = std::exp(rng.uniform(std::log(0.05), std::log(0.5)));
        Array u({B, L, D}), delta({B, L, D}), bmat({B, L, N}), cmat({B, L, N});
        for (double& v : u.data) v = rng.uniform(-1, 1);
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t t = 0; t < L; ++t) {
                for (std::size_t d = 0; d < D; ++d) delta.data[(bi * L + t) * D + d] = dconst.data[d];
                for (std::size_t n = 0; n < N; ++n) {
                    bmat.data[(bi * L + t) * N + n] = brow.data[n];
                    cmat.data[(bi * L + t) * N + n] = crow.data[n];
                }
            }
        Array y = ssm::selective_scan_reference(u, delta, a, bmat, cmat, dskip);
        // Induced discrete LTI per channel: a_bar = exp(delta*a), b_bar = delta*b.
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t d = 0; d < D; ++d) {
                ssm::DiscreteLti lti;
                for (std::size_t n = 0; n < N; ++n) {
                    lti.a_bar.push_back(std::exp(dconst.data[d] * a.data[d * N + n]));
                    lti.b_bar.push_back(dconst.data[d] * brow.data[n]);
                    lti.c.push_back(crow.data[n]);
                }
                lti.d = dskip.data[d];
                std::vector<double> uchan(L);
                for (std::size_t t = 0; t < L; ++t) uchan[t] = u.data[(bi * L + t) * D + d];
                auto y_ref = ssm::ssm_recurrent(lti, uchan);
                for (std::size_t t = 0; t < L; ++t) {
                    double err = rel_err(y_ref[t], y.data[(bi * L + t) * D + d]);
                    res.max_err = std::max(res.max_err, err);
                    if (err > res.tolerance && res.pass) {
                        res.pass = false;
                        std::ostringstream os;
                        os << "case " << k << " (B,L,D,N)=(" << B << "," << L << "," << D << ","
                           << N << ") channel " << d << " t=" << t;
                        res.detail = os.str();
                    }
                }
            }
    }
    return res;
}

SuiteResult verify_associative_scan(int n_cases, std::uint64_t seed) {
    SuiteResult res{.name = "associative_vs_sequential_scan", .pass = true, .max_err = 0.0,
                    .tolerance = 1e-10, .detail = ""};
    Rng rng(seed);
    for (int k = 0; k < n_cases; ++k) {
        std::size_t B = 1 + rng.uniform_index(2), L = 1 + rng.uniform_index(64);
        std::size_t D = 1 + rng.uniform_index(4), N = 1 + rng.uniform_index(8);
        num::ParamStore store;
        Rng init = Rng::substream(seed, "init", static_cast<std::uint64_t>(k));
        ssm::SelectiveSSMParams p = ssm::SelectiveSSMParams::create(store, "s", D, N, init);
        Array x({B, L, D});
        for (double& v : x.data) v = rng.uniform(-1, 1);
        Tape tape(false);
        Tensor xt = tape.constant(x);
        Array y_seq = ssm::selective_scan(tape, p, xt).value();
        Array y_par = ssm::associative_scan_selective(p, x);
        for (std::size_t i = 0; i < y_seq.numel(); ++i) {
            double err = rel_err(y_seq.data[i], y_par.data[i]);
            res.max_err = std::max(res.max_err, err);
            if (err > res.tolerance && res.pass) {
                res.pass = false;
                std::ostringstream os;
                os << "case " << k << " (B,L,D,N)=(" << B << "," << L << "," << D << "," << N
                   << ") flat index " << i;
                res.detail = os.str();
            }
        }
    }
    return res;
}

SuiteResult verify_scan_stability(int n_cases, std::uint64_t seed) {
    SuiteResult res{.name = "discretization_stability", .pass = true, .max_err = 0.0,
                    .tolerance = 1.0, .detail = ""};
    Rng rng(seed);
    for (int k = 0; k < n_cases; ++k) {
        std::size_t D = 1 + rng.uniform_index(8), N = 1 + rng.uniform_index(16);
        Array a_log({D, N}), delta({D});
        for (double& v : a_log.data) v = rng.uniform(-3.0, 3.0);
        for (double& v : delta.data) v = std::exp(rng.uniform(std::log(1e-4), std::log(10.0)));
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t n = 0; n < N; ++n) {
                double abar = std::exp(delta.data[d] * -std::exp(a_log.data[d * N + n]));
                res.max_err = std::max(res.max_err, std::fabs(abar));
                if (std::fabs(abar) >= 1.0) {
                    res.pass = false;
                    res.detail = "unstable a_bar at case " + std::to_string(k);
                }
            }
    }
    return res;
}

namespace {

// max relative error of param gradients against central differences, over up
// to `max_coords` coordinates of each listed parameter
double param_grad_check(rl::ValueNet& net, const rl::TemporalCrowdState& window,
                        const std::vector<std::string>& names, double h, std::size_t max_coords) {
    auto loss_value = [&]() {
        Tape tape(false);
        return num::sum(net.value_forward(tape, window)).value().data[0];
    };
    net.params().zero_grad();
    Tape tape;
    Tensor loss = num::sum(net.value_forward(tape, window));
    tape.backward(loss);
    double max_err = 0.0;
    for (const std::string& name : names) {
        num::Parameter& p = net.params().get(name);
        std::size_t coords = std::min(max_coords, p.value.numel());
        for (std::size_t i = 0; i < coords; ++i) {
            double orig = p.value.data[i];
            p.value.data[i] = orig + h;
            double fp = loss_value();
            p.value.data[i] = orig - h;
            double fm = loss_value();
            p.value.data[i] = orig;
            double numeric = (fp - fm) / (2.0 * h);
            double analytic = p.grad.data[i];
            double denom = std::max({1e-6, std::fabs(analytic), std::fabs(numeric)});
            max_err = std::max(max_err, std::fabs(analytic - numeric) / denom);
        }
    }
    return max_err;
}

}  // namespace

SuiteResult verify_gradients(int instances_per_layer, std::uint64_t seed) {
    SuiteResult res{.name = "gradient_checks", .pass = true, .max_err = 0.0, .tolerance = 1e-4,
                    .detail = ""};
    Rng rng(seed);
    double h = 1e-5;
    auto note = [&](const std::string& layer, double err) {
        res.max_err = std::max(res.max_err, err);
        if (err > res.tolerance && res.pass) {
            res.pass = false;
            res.detail = layer + " gradient check failed with max rel err " + std::to_string(err);
        }
    };

    for (int k = 0; k < instances_per_layer; ++k) {
        // linear layer
        {
            std::size_t m = 1 + rng.uniform_index(4), kk = 1 + rng.uniform_index(6),
                        n = 1 + rng.uniform_index(5);
            Array w({kk, n}), x({m, kk});
            for (double& v : w.data) v = rng.uniform(-1, 1);
            for (double& v : x.data) v = rng.uniform(-1, 1);
            note("linear", num::grad_check(
                               [&](Tape& t, Tensor xi) {
                                   return num::sum(num::matmul(xi, t.constant(w)));
                               },
                               x, h));
        }
        // elementwise chain
        {
            Array x({1 + rng.uniform_index(8)});
            for (double& v : x.data) v = rng.uniform(-2, 2);
            note("elementwise", num::grad_check(
                                    [&](Tape& t, Tensor xi) {
                                        Tensor y = num::silu(num::tanh_op(num::softplus(xi)));
                                        y = num::mul(y, num::sigmoid(num::neg(xi)));
                                        (void)t;
                                        return num::sum(y);
                                    },
                                    x, h));
        }
        // mse
        {
            std::size_t n = 1 + rng.uniform_index(8);
            Array x({n}), y({n});
            for (double& v : x.data) v = rng.uniform(-2, 2);
            for (double& v : y.data) v = rng.uniform(-2, 2);
            note("mse", num::grad_check(
                            [&](Tape& t, Tensor xi) { return num::mse_loss(xi, t.constant(y)); },
                            x, h));
        }
        // rms_norm + conv1d
        {
            std::size_t B = 1, L = 1 + rng.uniform_index(5), C = 1 + rng.uniform_index(4);
            Array x({B, L, C}), w({C}), cw({C, 3}), cb({C});
            for (double& v : x.data) v = rng.uniform(-2, 2);
            for (double& v : w.data) v = rng.uniform(0.5, 1.5);
            for (double& v : cw.data) v = rng.uniform(-1, 1);
            for (double& v : cb.data) v = rng.uniform(-0.5, 0.5);
            note("rms_norm", num::grad_check(
                                 [&](Tape& t, Tensor xi) {
                                     return num::sum(num::rms_norm(xi, t.constant(w)));
                                 },
                                 x, h));
            note("causal_conv1d", num::grad_check(
                                      [&](Tape& t, Tensor xi) {
                                          return num::sum(num::causal_conv1d(xi, t.constant(cw),
                                                                             t.constant(cb)));
                                      },
                                      x, h));
        }
        // selective scan core wrt input and wrt parameters
        {
            std::size_t B = 1, L = 2 + rng.uniform_index(4), D = 1 + rng.uniform_index(3),
                        N = 1 + rng.uniform_index(4);
            Array a({D, N}), bmat({B, L, N}), cmat({B, L, N}), dskip({D}), delta({B, L, D});
            for (double& v : a.data) v = -std::exp(rng.uniform(-1.0, 0.5));
            for (double& v : bmat.data) v = rng.uniform(-1, 1);
            for (double& v : cmat.data) v = rng.uniform(-1, 1);
            for (double& v : dskip.data) v = rng.uniform(-1, 1);
            for (double& v : delta.data) v = std::exp(rng.uniform(std::log(0.05), std::log(0.5)));
            Array x({B, L, D});
            for (double& v : x.data) v = rng.uniform(-1, 1);
            note("selective_scan(u)",
                 num::grad_check(
                     [&](Tape& t, Tensor xi) {
                         return num::sum(ssm::selective_scan_core(xi, t.constant(delta), t.constant(a),
                                                                  t.constant(bmat), t.constant(cmat),
                                                                  t.constant(dskip)));
                     },
                     x, h));
            note("selective_scan(delta)",
                 num::grad_check(
                     [&](Tape& t, Tensor di) {
                         return num::sum(ssm::selective_scan_core(t.constant(x), di, t.constant(a),
                                                                  t.constant(bmat), t.constant(cmat),
                                                                  t.constant(dskip)));
                     },
                     delta, h));
            note("selective_scan(a)",
                 num::grad_check(
                     [&](Tape& t, Tensor ai) {
                         return num::sum(ssm::selective_scan_core(t.constant(x), t.constant(delta), ai,
                                                                  t.constant(bmat), t.constant(cmat),
                                                                  t.constant(dskip)));
                     },
                     a, h));
            note("selective_scan(b)",
                 num::grad_check(
                     [&](Tape& t, Tensor bi) {
                         return num::sum(ssm::selective_scan_core(t.constant(x), t.constant(delta),
                                                                  t.constant(a), bi, t.constant(cmat),
                                                                  t.constant(dskip)));
                     },
                     bmat, h));
        }
        // GRU cell composition wrt input
        {
            std::size_t e = 3, hh = 4;
            Array wxz({e, hh}), whz({hh, hh}), bz({hh}), wxr({e, hh}), whr({hh, hh}), br({hh});
            Array wxn({e, hh}), whn({hh, hh}), bn({hh}), h0({1, hh});
            for (Array* arr : {&wxz, &whz, &bz, &wxr, &whr, &br, &wxn, &whn, &bn, &h0})
                for (double& v : arr->data) v = rng.uniform(-0.8, 0.8);
            Array x({1, e});
            for (double& v : x.data) v = rng.uniform(-1, 1);
            note("gru_cell",
                 num::grad_check(
                     [&](Tape& t, Tensor xi) {
                         Tensor hprev = t.constant(h0);
                         Tensor z = num::sigmoid(num::add(
                             num::add(num::matmul(xi, t.constant(wxz)),
                                      num::matmul(hprev, t.constant(whz))),
                             t.constant(bz)));
                         Tensor r = num::sigmoid(num::add(
                             num::add(num::matmul(xi, t.constant(wxr)),
                                      num::matmul(hprev, t.constant(whr))),
                             t.constant(br)));
                         Tensor n = num::tanh_op(num::add(
                             num::add(num::matmul(xi, t.constant(wxn)),
                                      num::matmul(num::mul(r, hprev), t.constant(whn))),
                             t.constant(bn)));
                         Tensor hn = num::add(num::mul(z, hprev),
                                              num::mul(num::affine(z, -1.0, 1.0), n));
                         return num::sum(hn);
                     },
                     x, h));
        }
    }

    // Mamba block wrt input (smaller instance count; each check is pricey)
    for (int k = 0; k < std::min(instances_per_layer, 5); ++k) {
        num::ParamStore store;
        Rng init = Rng::substream(seed, "mamba-init", static_cast<std::uint64_t>(k));
        ssm::MambaBlockParams block = ssm::MambaBlockParams::create(store, "b", 6, 12, 4, 4, init);
        // non-degenerate output projection
        for (double& v : block.w_out->value.data) v = init.uniform(-0.3, 0.3);
        Array x({1, 3, 6});
        for (double& v : x.data) v = rng.uniform(-1, 1);
        Tape probe(false);
        note("mamba_block", num::grad_check(
                                [&](Tape& t, Tensor xi) {
                                    return num::sum(ssm::mamba_block(t, block, xi));
                                },
                                x, h));
    }

    // full value network at T=2, d_model=8, wrt a representative parameter set
    {
        rl::ValueNetConfig vc;
        vc.encoder = rl::EncoderKind::CamrlGru;
        vc.d_model = 8;
        vc.embed_dim = 8;
        vc.rnn_hidden = 8;
        vc.window = 2;
        vc.ssm_state = 4;
        vc.mamba_blocks = 4;
        rl::ValueNet net(vc, seed);
        for (auto* p : net.params().all()) {
            if (p->name.find("w_out") != std::string::npos) {
                Rng init = Rng::substream(seed, "wout", 1);
                for (double& v : p->value.data) v = init.uniform(-0.3, 0.3);
            }
        }
        Rng wr = Rng::substream(seed, "window", 2);
        rl::TemporalCrowdState window = random_window(wr, vc.window, 2);
        std::vector<std::string> names = {"head_w",          "enc.gru.whn",     "enc.proj_w",
                                          "mamba.block0.w_in", "mamba.block2.ssm.a_log",
                                          "mamba.block1.conv_w", "mamba.block3.ssm.dt_bias"};
        note("value_forward", param_grad_check(net, window, names, h, 12));
    }
    return res;
}

SuiteResult verify_reward_transcription(int n_draws, std::uint64_t seed) {
    SuiteResult res{.name = "reward_transcription", .pass = true, .max_err = 0.0, .tolerance = 0.0,
                    .detail = ""};
    reward::RewardConfig cfg;
    // literal transcription of the piecewise definition, kept independent of
    // the implementation under test
    auto literal = [&](double dt_sep, bool at_goal, double t) -> double {
        if (dt_sep <= 0.0) return -0.25;
        else if (dt_sep < cfg.discomfort_radius) return (dt_sep - cfg.discomfort_radius) * cfg.dt / 2.0;
        else if (at_goal) return 1.0;
        else if (t >= cfg.episode_limit) return -0.5;
        else return 0.0;
    };
    Rng rng(seed);
    auto check = [&](double d, bool g, double t) {
        double got = reward::compute_reward(d, g, t, cfg);
        double want = literal(d, g, t);
        if (got != want && res.pass) {  // bitwise
            res.pass = false;
            std::ostringstream os;
            os << "mismatch at d_t=" << d << " at_goal=" << g << " t=" << t << ": got " << got
               << " want " << want;
            res.detail = os.str();
        }
    };
    for (int i = 0; i < n_draws; ++i) {
        double d = rng.uniform(-0.5, 1.5);
        bool g = rng.bernoulli(0.2);
        double t = rng.uniform(0.0, 30.0);
        check(d, g, t);
    }
    for (bool g : {false, true}) {
        for (double t : {0.0, 10.0, 25.0, 26.0}) {
            check(0.0, g, t);
            check(cfg.discomfort_radius, g, t);
            check(-0.01, g, t);
            check(1.0, g, t);
        }
    }
    return res;
}

SuiteResult verify_metric_identities() {
    SuiteResult res{.name = "metric_identities", .pass = true, .max_err = 0.0, .tolerance = 0.0,
                    .detail = ""};
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        eval::MetricsRecord m;
        m.n_success = rng.uniform_index(50);
        m.n_collision = rng.uniform_index(50);
        m.n_timeout = rng.uniform_index(50);
        m.episodes = m.n_success + m.n_collision + m.n_timeout;
        if (m.episodes == 0) continue;
        if (!m.counts_consistent()) {
            res.pass = false;
            res.detail = "counts identity failed";
        }
    }
    eval::MetricsRecord m;
    m.episodes = 50;
    m.n_success = 44;
    m.n_collision = 5;
    m.n_timeout = 1;
    if (m.success_rate() != 0.88) {
        res.pass = false;
        res.detail = "44/50 did not report 0.88";
    }
    if (!m.counts_consistent()) {
        res.pass = false;
        res.detail = "44+5+1 != 50";
    }
    return res;
}

SuiteResult verify_invisible_robot(int n_seeds, bool all_environments) {
    SuiteResult res{.name = "invisible_robot", .pass = true, .max_err = 0.0, .tolerance = 0.0,
                    .detail = ""};
    // A second policy that behaves very differently from ORCA.
    class StraightPolicy : public sim::RobotPolicy {
    public:
        Vec2 act(const sim::JointState& s, double) override {
            Vec2 dir = (s.robot.hidden.goal - s.robot.obs.p).normalized();
            return dir * s.robot.hidden.v_pref;
        }
        std::string name() const override { return "straight"; }
    };
    sim::SimParams sp;
    std::vector<std::string> envs =
        all_environments ? eval::kAllEnvironments : std::vector<std::string>{"baseline-circle"};
    for (const auto& env : envs) {
        for (auto cm : {sim::CrowdModel::Orca, sim::CrowdModel::Sfm}) {
            for (int seed = 0; seed < n_seeds; ++seed) {
                sim::ScenarioConfig cfg = sim::ScenarioConfig::from_name(env, cm, seed);
                sim::World w1 = sim::spawn_scenario(cfg, sp);
                sim::World w2 = sim::spawn_scenario(cfg, sp);
                sim::OrcaRobotPolicy p1(sp);
                StraightPolicy p2;
                int steps = static_cast<int>(sp.time_limit / sp.dt);
                for (int s = 0; s < steps; ++s) {
                    sim::step(w1, p1.act(sim::observe(w1), w1.time), sp);
                    sim::step(w2, p2.act(sim::observe(w2), w2.time), sp);
                    for (std::size_t i = 0; i < w1.humans.size(); ++i) {
                        const Vec2& a = w1.humans[i].obs.p;
                        const Vec2& b = w2.humans[i].obs.p;
                        if (a.x != b.x || a.y != b.y) {  // bitwise
                            res.pass = false;
                            std::ostringstream os;
                            os << env << "/" << sim::crowd_model_name(cm) << " seed " << seed
                               << " step " << s << " human " << i << " diverged";
                            res.detail = os.str();
                            return res;
                        }
                    }
                }
            }
        }
    }
    return res;
}

SuiteResult verify_causality(std::uint64_t seed) {
    SuiteResult res{.name = "mamba_causality", .pass = true, .max_err = 0.0, .tolerance = 1e-12,
                    .detail = ""};
    Rng rng(seed);
    num::ParamStore store;
    ssm::MambaStackConfig mc;
    mc.d_model = 8;
    mc.ssm_state = 4;
    Rng init = Rng::substream(seed, "init");
    ssm::MambaStackParams stack = ssm::MambaStackParams::create(store, "m", mc, init);
    for (auto* p : store.all()) {
        if (p->name.find("w_out") != std::string::npos)
            for (double& v : p->value.data) v = init.uniform(-0.3, 0.3);
    }
    std::size_t L = 10;
    Array x({1, L, mc.d_model});
    for (double& v : x.data) v = rng.uniform(-1, 1);
    Tape t0(false);
    Array y0 = ssm::mamba_stack(t0, stack, t0.constant(x)).value();
    for (std::size_t pos = 0; pos < L; ++pos) {
        Array xp = x;
        for (std::size_t j = 0; j < mc.d_model; ++j)
            xp.data[pos * mc.d_model + j] += rng.uniform(-0.5, 0.5);
        Tape t1(false);
        Array y1 = ssm::mamba_stack(t1, stack, t1.constant(xp)).value();
        for (std::size_t l = 0; l < pos; ++l) {
            for (std::size_t j = 0; j < mc.d_model; ++j) {
                double diff = std::fabs(y1.data[l * mc.d_model + j] - y0.data[l * mc.d_model + j]);
                res.max_err = std::max(res.max_err, diff);
                if (diff > res.tolerance && res.pass) {
                    res.pass = false;
                    res.detail = "perturbation at position " + std::to_string(pos) +
                                 " leaked to earlier position " + std::to_string(l);
                }
            }
        }
    }
    return res;
}

SuiteResult verify_step_equivalence(std::uint64_t seed) {
    SuiteResult res{.name = "step_vs_batch_forward", .pass = true, .max_err = 0.0,
                    .tolerance = 1e-12, .detail = ""};
    for (auto kind : {rl::EncoderKind::CamrlGru, rl::EncoderKind::LstmRl, rl::EncoderKind::CadrlMlp}) {
        rl::ValueNetConfig vc;
        vc.encoder = kind;
        vc.d_model = 16;
        vc.embed_dim = 16;
        vc.rnn_hidden = 16;
        vc.window = 4;
        vc.ssm_state = 4;
        rl::ValueNet net(vc, seed);
        for (auto* p : net.params().all()) {
            if (p->name.find("w_out") != std::string::npos) {
                Rng init = Rng::substream(seed, "wout", 7);
                for (double& v : p->value.data) v = init.uniform(-0.3, 0.3);
            }
        }
        Rng rng = Rng::substream(seed, encoder_name(kind));
        for (int k = 0; k < 10; ++k) {
            rl::TemporalCrowdState window = random_window(rng, vc.window, 1 + static_cast<int>(rng.uniform_index(6)));
            Tape tape(false);
            Array batch = net.value_forward(tape, window).value();
            std::vector<double> stepped = net.values(window);
            for (std::size_t i = 0; i < stepped.size(); ++i) {
                double err = std::fabs(batch.data[i] - stepped[i]);
                res.max_err = std::max(res.max_err, err);
                if (err > res.tolerance && res.pass) {
                    res.pass = false;
                    res.detail = encoder_name(kind) + " window " + std::to_string(k) +
                                 " position " + std::to_string(i);
                }
            }
        }
    }
    return res;
}

std::vector<SuiteResult> verify_all() {
    return {verify_zoh(),
            verify_ssm_equivalence(),
            verify_selective_degeneration(),
            verify_associative_scan(),
            verify_scan_stability(),
            verify_gradients(),
            verify_reward_transcription(),
            verify_metric_identities(),
            verify_invisible_robot(),
            verify_causality(),
            verify_step_equivalence()};
}

}  // namespace camrl::verify
