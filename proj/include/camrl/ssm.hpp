#pragma once

#include <cstddef>
#include <vector>

#include "camrl/autodiff.hpp"
#include "camrl/optim.hpp"
#include "camrl/rng.hpp"

namespace camrl::ssm {

using num::Array;
using num::Tensor;

// ---- linear time-invariant SSM (single input / single output channel) ----

// Continuous-time params with diagonal state matrix. Stability needs
// Re(a) < 0 on every diagonal entry.
struct LtiParams {
    std::vector<double> a_diag;  // N
    std::vector<double> b;       // N
    std::vector<double> c;       // N
    double d = 0.0;              // skip
    double delta = 1.0;          // step size, > 0
};

struct DiscreteLti {
    std::vector<double> a_bar;  // exp(delta * a) per entry
    std::vector<double> b_bar;
    std::vector<double> c;
    double d = 0.0;
};

// Zero-order hold: a_bar = exp(delta*a), b_bar = (exp(delta*a)-1)/a * b with
// the a -> 0 limit delta*b. Throws when delta <= 0.
DiscreteLti discretize_zoh(const LtiParams& p);

// x_n = a_bar x_{n-1} + b_bar u_n; y_n = c x_n + d u_n, x_0 = 0.
std::vector<double> ssm_recurrent(const DiscreteLti& p, const std::vector<double>& u);

// kernel[i] = c . a_bar^i . b_bar for i in [0, L). Throws when L < 1.
std::vector<double> ssm_conv_kernel(const DiscreteLti& p, std::size_t len);

// y = causal conv(kernel, u) + d*u. Direct O(L^2); lengths must match.
std::vector<double> ssm_conv_apply(const std::vector<double>& kernel, const std::vector<double>& u,
                                   double d);

// ---- selective (input-dependent) SSM ----

// Learnable parameters of the selective scan over D channels with state size
// N. A is stored as log magnitudes and realized as -exp(a_log), so every
// realized entry is strictly negative and every discretized |a_bar| < 1.
struct SelectiveSSMParams {
    num::Parameter* a_log = nullptr;      // (D, N)
    num::Parameter* w_b = nullptr;        // (D, N): s_B projection
    num::Parameter* w_c = nullptr;        // (D, N): s_C projection
    num::Parameter* w_dt_down = nullptr;  // (D, 1): rank-1 s_delta
    num::Parameter* w_dt_up = nullptr;    // (1, D)
    num::Parameter* dt_bias = nullptr;    // (D)
    num::Parameter* d_skip = nullptr;     // (D)
    std::size_t channels = 0;
    std::size_t state = 0;

    static SelectiveSSMParams create(num::ParamStore& store, const std::string& prefix,
                                     std::size_t channels, std::size_t state, Rng& rng);
    std::vector<Tensor> watch(num::Tape& tape) const;  // leaves in declaration order
};

// Core scan as a single differentiable tape op.
// u, delta: (B,L,D); a: (D,N); b, c: (B,L,N); d_skip: (D) -> y: (B,L,D)
// Per channel: h_t = exp(delta_t*a) h_{t-1} + delta_t*b_t*u_t (Euler input
// map), y_t = <c_t, h_t> + d*u_t.
Tensor selective_scan_core(Tensor u, Tensor delta, Tensor a, Tensor b, Tensor c, Tensor d_skip);

// Full Algorithm-1 style op: projections s_B, s_C, s_delta computed from x,
// softplus warp on delta, then the scan. x: (B,L,D) -> (B,L,D).
Tensor selective_scan(num::Tape& tape, const SelectiveSSMParams& p, Tensor x);

// Same output via the first-order-recurrence associative combine
// (a1,b1)o(a2,b2) = (a2*a1, a2*b1 + b2); forward only, used for validation
// and parallel evaluation.
Array associative_scan_selective(const SelectiveSSMParams& p, const Array& x);

// Plain sequential reference (forward only), the test oracle for both scan
// implementations.
Array selective_scan_reference(const Array& u, const Array& delta, const Array& a, const Array& b,
                               const Array& c, const Array& d_skip);

}  // namespace camrl::ssm
