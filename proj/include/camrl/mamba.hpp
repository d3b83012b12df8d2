#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "camrl/ssm.hpp"

namespace camrl::ssm {

// Residual block: rms_norm -> input projection to 2x expanded width in two
// branches -> (causal depthwise conv, silu, selective scan) gated by
// silu(z) -> output projection -> residual add.
struct MambaBlockParams {
    num::Parameter* norm_w = nullptr;  // (d_model)
    num::Parameter* w_in = nullptr;    // (d_model, 2*d_inner)
    num::Parameter* conv_w = nullptr;  // (d_inner, conv_kernel)
    num::Parameter* conv_b = nullptr;  // (d_inner)
    SelectiveSSMParams scan;
    num::Parameter* w_out = nullptr;  // (d_inner, d_model)
    std::size_t d_model = 0;
    std::size_t d_inner = 0;
    std::size_t conv_kernel = 0;

    static MambaBlockParams create(num::ParamStore& store, const std::string& prefix,
                                   std::size_t d_model, std::size_t d_inner,
                                   std::size_t conv_kernel, std::size_t ssm_state, Rng& rng);
};

struct MambaStackConfig {
    std::size_t d_model = 64;
    std::size_t ssm_state = 16;
    std::size_t expansion = 2;
    std::size_t conv_kernel = 4;
    std::size_t blocks = 4;
};

struct MambaStackParams {
    std::vector<MambaBlockParams> blocks;
    MambaStackConfig cfg;

    static MambaStackParams create(num::ParamStore& store, const std::string& prefix,
                                   const MambaStackConfig& cfg, Rng& rng);
    // Exactly four blocks; anything else is a configuration error.
    void validate() const;
};

Tensor mamba_block(num::Tape& tape, const MambaBlockParams& p, Tensor x);     // (B,L,d_model)
Tensor mamba_stack(num::Tape& tape, const MambaStackParams& p, Tensor seq);   // (B,L,d_model)

// ---- stateful single-step inference ----
// Processes one position at a time carrying (conv tail, ssm hidden) per
// block; output matches the full forward pass position by position. Used for
// cheap lookahead scoring where one shared prefix fans out into many
// single-step continuations.
struct MambaStepState {
    struct BlockState {
        std::vector<double> conv_tail;  // (d_inner * (conv_kernel - 1)), oldest first
        std::vector<double> hidden;     // (d_inner * ssm_state)
    };
    std::vector<BlockState> blocks;

    static MambaStepState initial(const MambaStackParams& p);
};

// x_t: (d_model) -> (d_model), advancing `state` in place.
std::vector<double> mamba_stack_step(const MambaStackParams& p, MambaStepState& state,
                                     const std::vector<double>& x_t);

}  // namespace camrl::ssm
