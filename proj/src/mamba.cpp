#include "camrl/mamba.hpp"

#include "camrl/scalar_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace camrl::ssm {

using num::Array;
using num::Tape;

namespace {

Array uniform_init(num::Shape shape, double scale, Rng& rng) {
    Array w(std::move(shape));
    for (double& v : w.data) v = rng.uniform(-scale, scale);
    return w;
}

}  // namespace

MambaBlockParams MambaBlockParams::create(num::ParamStore& store, const std::string& prefix,
                                          std::size_t d_model, std::size_t d_inner,
                                          std::size_t conv_kernel, std::size_t ssm_state,
                                          Rng& rng) {
    MambaBlockParams p;
    p.d_model = d_model;
    p.d_inner = d_inner;
    p.conv_kernel = conv_kernel;
    p.norm_w = &store.create(prefix + ".norm_w", Array({d_model}, 1.0));
    p.w_in = &store.create(prefix + ".w_in",
                           uniform_init({d_model, 2 * d_inner},
                                        std::sqrt(1.0 / static_cast<double>(d_model)), rng));
    p.conv_w = &store.create(prefix + ".conv_w",
                             uniform_init({d_inner, conv_kernel},
                                          std::sqrt(1.0 / static_cast<double>(conv_kernel)), rng));
    p.conv_b = &store.create(prefix + ".conv_b", Array({d_inner}, 0.0));
    p.scan = SelectiveSSMParams::create(store, prefix + ".ssm", d_inner, ssm_state, rng);
    // Residual branch starts as identity: zero output projection.
    p.w_out = &store.create(prefix + ".w_out", Array({d_inner, d_model}, 0.0));
    return p;
}

MambaStackParams MambaStackParams::create(num::ParamStore& store, const std::string& prefix,
                                          const MambaStackConfig& cfg, Rng& rng) {
    MambaStackParams p;
    p.cfg = cfg;
    for (std::size_t i = 0; i < cfg.blocks; ++i) {
        p.blocks.push_back(MambaBlockParams::create(store, prefix + ".block" + std::to_string(i),
                                                    cfg.d_model, cfg.d_model * cfg.expansion,
                                                    cfg.conv_kernel, cfg.ssm_state, rng));
    }
    return p;
}

void MambaStackParams::validate() const {
    if (blocks.size() != 4) {
        throw std::invalid_argument("mamba_stack: expected exactly 4 blocks, got " +
                                    std::to_string(blocks.size()));
    }
}

Tensor mamba_block(num::Tape& tape, const MambaBlockParams& p, Tensor x) {
    if (x.shape().size() != 3 || x.shape()[2] != p.d_model) {
        throw std::invalid_argument("mamba_block: input must be (B,L," + std::to_string(p.d_model) +
                                    ")");
    }
    Tensor normed = num::rms_norm(x, tape.watch(*p.norm_w));
    Tensor xz = num::matmul(normed, tape.watch(*p.w_in));  // (B,L,2*d_inner)
    Tensor xa = num::slice_last(xz, 0, p.d_inner);
    Tensor z = num::slice_last(xz, p.d_inner, p.d_inner);
    xa = num::causal_conv1d(xa, tape.watch(*p.conv_w), tape.watch(*p.conv_b));
    xa = num::silu(xa);
    Tensor scanned = selective_scan(tape, p.scan, xa);
    Tensor gated = num::mul(scanned, num::silu(z));
    Tensor out = num::matmul(gated, tape.watch(*p.w_out));
    return num::add(x, out);
}

Tensor mamba_stack(num::Tape& tape, const MambaStackParams& p, Tensor seq) {
    p.validate();
    Tensor h = seq;
    for (const auto& block : p.blocks) h = mamba_block(tape, block, h);
    return h;
}

MambaStepState MambaStepState::initial(const MambaStackParams& p) {
    MambaStepState s;
    s.blocks.resize(p.blocks.size());
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const auto& b = p.blocks[i];
        s.blocks[i].conv_tail.assign(b.d_inner * (b.conv_kernel - 1), 0.0);
        s.blocks[i].hidden.assign(b.d_inner * b.scan.state, 0.0);
    }
    return s;
}

std::vector<double> mamba_stack_step(const MambaStackParams& p, MambaStepState& state,
                                     const std::vector<double>& x_t) {
    p.validate();
    if (state.blocks.size() != p.blocks.size()) {
        throw std::invalid_argument("mamba_stack_step: state/block count mismatch");
    }
    std::vector<double> h = x_t;
    std::vector<double> normed, xa, z, gated;
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
        const MambaBlockParams& b = p.blocks[bi];
        MambaStepState::BlockState& bs = state.blocks[bi];
        std::size_t dm = b.d_model, di = b.d_inner, K = b.conv_kernel, N = b.scan.state;
        if (h.size() != dm) throw std::invalid_argument("mamba_stack_step: bad input width");

        // rms_norm, same accumulation order as the batched op
        normed.assign(dm, 0.0);
        double ms = 0.0;
        for (std::size_t j = 0; j < dm; ++j) ms += h[j] * h[j];
        double inv = 1.0 / std::sqrt(ms / static_cast<double>(dm) + 1e-8);
        const Array& nw = b.norm_w->value;
        for (std::size_t j = 0; j < dm; ++j) normed[j] = h[j] * inv * nw.data[j];

        // input projection to the two branches
        const Array& win = b.w_in->value;
        xa.assign(di, 0.0);
        z.assign(di, 0.0);
        for (std::size_t j = 0; j < dm; ++j) {
            double v = normed[j];
            if (v == 0.0) continue;
            const double* wrow = win.data.data() + j * 2 * di;
            for (std::size_t k = 0; k < di; ++k) xa[k] += v * wrow[k];
            for (std::size_t k = 0; k < di; ++k) z[k] += v * wrow[di + k];
        }

        // causal depthwise conv from the cached tail, then shift the cache
        const Array& cw = b.conv_w->value;
        const Array& cb = b.conv_b->value;
        for (std::size_t c = 0; c < di; ++c) {
            double acc = cb.data[c];
            for (std::size_t kk = 0; kk + 1 < K; ++kk) {
                acc += cw.data[c * K + kk] * bs.conv_tail[c * (K - 1) + kk];
            }
            acc += cw.data[c * K + (K - 1)] * xa[c];
            // slide window
            for (std::size_t kk = 0; kk + 2 < K; ++kk) {
                bs.conv_tail[c * (K - 1) + kk] = bs.conv_tail[c * (K - 1) + kk + 1];
            }
            bs.conv_tail[c * (K - 1) + (K - 2)] = xa[c];
            xa[c] = num::silu_scalar(acc);
        }

        // selective scan, one step
        const Array& wb = b.scan.w_b->value;
        const Array& wc = b.scan.w_c->value;
        const Array& wdown = b.scan.w_dt_down->value;
        const Array& wup = b.scan.w_dt_up->value;
        const Array& dtb = b.scan.dt_bias->value;
        const Array& alog = b.scan.a_log->value;
        const Array& skip = b.scan.d_skip->value;
        double down = 0.0;
        std::vector<double> bproj(N, 0.0), cproj(N, 0.0);
        for (std::size_t d = 0; d < di; ++d) {
            down += xa[d] * wdown.data[d];
            for (std::size_t n = 0; n < N; ++n) {
                bproj[n] += xa[d] * wb.data[d * N + n];
                cproj[n] += xa[d] * wc.data[d * N + n];
            }
        }
        gated.assign(di, 0.0);
        for (std::size_t d = 0; d < di; ++d) {
            double raw = down * wup.data[d] + dtb.data[d];
            double dt = num::stable_softplus(raw);
            double acc = skip.data[d] * xa[d];
            double dtu = dt * xa[d];
            double* hd = bs.hidden.data() + d * N;
            for (std::size_t n = 0; n < N; ++n) {
                double abar = std::exp(dt * -std::exp(alog.data[d * N + n]));
                hd[n] = abar * hd[n] + dtu * bproj[n];
                acc += cproj[n] * hd[n];
            }
            gated[d] = acc * num::silu_scalar(z[d]);
        }

        // output projection + residual
        const Array& wout = b.w_out->value;
        for (std::size_t d = 0; d < di; ++d) {
            double v = gated[d];
            if (v == 0.0) continue;
            const double* wrow = wout.data.data() + d * dm;
            for (std::size_t j = 0; j < dm; ++j) h[j] += v * wrow[j];
        }
    }
    return h;
}

}  // namespace camrl::ssm
