#pragma once

#include <functional>
#include <string>
#include <vector>

#include "camrl/array.hpp"

namespace camrl::num {

class Tape;

// Learnable leaf that persists across tapes. Gradients from Tape::backward
// accumulate into `grad`; callers zero it between optimizer steps.
struct Parameter {
    std::string name;
    Array value;
    Array grad;

    Parameter(std::string n, Array v) : name(std::move(n)), value(std::move(v)), grad(value.shape, 0.0) {}
    void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
class Tensor {
public:
    Tensor() = default;
    const Array& value() const;
    const Shape& shape() const { return value().shape; }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Tensor(Tape* t, int id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Dynamic computation graph recorded in execution order (hence already
// topologically sorted). backward() walks it in reverse exactly once.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor constant(Array v) { return make_leaf(std::move(v), false, nullptr); }
    Tensor leaf(Array v, bool requires_grad) { return make_leaf(std::move(v), requires_grad, nullptr); }
    Tensor watch(Parameter& p) { return make_leaf(p.value, grad_enabled_, &p); }

    // Backward rule: given the node's output gradient, accumulate into inputs
    // via Tape::accumulate_grad.
    using BackwardFn = std::function<void(Tape&, const Array& out_grad)>;
    Tensor make_node(Array value, const std::vector<Tensor>& inputs, BackwardFn fn);

    void backward(const Tensor& loss);

    const Array& value_of(const Tensor& t) const { return nodes_[t.id_].value; }
    // Zero-shaped gradient for nodes the loss never touched.
    Array grad_of(const Tensor& t) const;
    bool requires_grad(const Tensor& t) const { return nodes_[t.id_].requires_grad; }
    void accumulate_grad(int node_id, const Array& g);

    bool grad_enabled() const { return grad_enabled_; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Array value;
        Array grad;  // lazily allocated during backward
        bool requires_grad = false;
        bool grad_live = false;
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    Tensor make_leaf(Array v, bool requires_grad, Parameter* p);
    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
    bool ran_backward_ = false;
};

// ---- elementwise / structural ops (all broadcast-aware where binary) ----
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor neg(Tensor a);
Tensor exp_op(Tensor a);
Tensor sigmoid(Tensor a);
Tensor tanh_op(Tensor a);
Tensor silu(Tensor a);
Tensor softplus(Tensor a);
// scale * a + shift, elementwise
Tensor affine(Tensor a, double scale, double shift);

// a: (..., m, k), b: (k, n) -> (..., m, n); leading dims of a are batch dims.
Tensor matmul(Tensor a, Tensor b);
Tensor sum(Tensor a);
Tensor mse_loss(Tensor pred, Tensor target);

Tensor reshape(Tensor a, Shape s);
Tensor slice_last(Tensor a, std::size_t start, std::size_t len);
Tensor concat_last(Tensor a, Tensor b);
// n tensors of identical shape (d...) -> (n, d...)
Tensor stack_rows(const std::vector<Tensor>& rows);

// RMS normalization over the last dimension with a learned scale.
Tensor rms_norm(Tensor x, Tensor weight, double eps = 1e-8);

// x: (B, L, C), w: (C, K), b: (C); causal depthwise convolution over L.
Tensor causal_conv1d(Tensor x, Tensor w, Tensor b);

// Scalar-valued f of one tensor input; compares the backward-pass gradient
// against central finite differences and returns the max relative error.
double grad_check(const std::function<Tensor(Tape&, Tensor)>& f, const Array& x, double h);

}  // namespace camrl::num
