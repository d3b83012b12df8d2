#include "camrl/autodiff.hpp"

#include "camrl/scalar_ops.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace camrl::num {

namespace {

void check_finite(const Array& a, const char* op) {
    if (!a.all_finite()) {
        throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
    }
}

std::vector<std::size_t> broadcast_strides(const Shape& from, const Shape& to) {
    std::size_t r = to.size();
    std::vector<std::size_t> strides(r, 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < from.size(); ++i) {
        std::size_t axis_from = from.size() - 1 - i;
        std::size_t axis_to = r - 1 - i;
        strides[axis_to] = (from[axis_from] == 1 && to[axis_to] != 1) ? 0 : stride;
        stride *= from[axis_from];
    }
    return strides;
}

// Applies f elementwise over the broadcast of a and b.
Array broadcast_apply(const Array& a, const Array& b, double (*f)(double, double)) {
    if (a.shape == b.shape) {
        Array out(a.shape);
        for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = f(a.data[i], b.data[i]);
        return out;
    }
    Shape os = broadcast_shape(a.shape, b.shape);
    Array out(os);
    std::size_t n = out.numel();
    if (n == 0) return out;
    auto sa = broadcast_strides(a.shape, os);
    auto sb = broadcast_strides(b.shape, os);
    std::size_t r = os.size();
    std::vector<std::size_t> idx(r, 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        out.data[flat] = f(a.data[oa], b.data[ob]);
        for (std::size_t k = r; k-- > 0;) {
            ++idx[k];
            oa += sa[k];
            ob += sb[k];
            if (idx[k] < os[k]) break;
            oa -= sa[k] * os[k];
            ob -= sb[k] * os[k];
            idx[k] = 0;
        }
    }
    return out;
}

// grad of the broadcast output mapped through g(out_grad, a, b) and reduced
// back onto a's shape
Array broadcast_backward(const Array& out_grad, const Array& a, const Array& b, const Shape& wrt,
                         double (*dfd)(double g, double av, double bv)) {
    Shape os = out_grad.shape;
    Array full(os);
    auto sa = broadcast_strides(a.shape, os);
    auto sb = broadcast_strides(b.shape, os);
    std::size_t r = os.size();
    std::vector<std::size_t> idx(r, 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t flat = 0; flat < out_grad.numel(); ++flat) {
        full.data[flat] = dfd(out_grad.data[flat], a.data[oa], b.data[ob]);
        for (std::size_t k = r; k-- > 0;) {
            ++idx[k];
            oa += sa[k];
            ob += sb[k];
            if (idx[k] < os[k]) break;
            oa -= sa[k] * os[k];
            ob -= sb[k] * os[k];
            idx[k] = 0;
        }
    }
    return reduce_to_shape(full, wrt);
}

}  // namespace

const Array& Tensor::value() const { return tape_->value_of(*this); }

Tensor Tape::make_leaf(Array v, bool requires_grad, Parameter* p) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = grad_enabled_ && requires_grad;
    n.param = p;
    nodes_.push_back(std::move(n));
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::make_node(Array value, const std::vector<Tensor>& inputs, BackwardFn fn) {
    bool rg = false;
    for (const Tensor& t : inputs) {
        if (t.tape() != this) throw std::invalid_argument("make_node: input from a different tape");
        rg = rg || nodes_[t.id()].requires_grad;
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = grad_enabled_ && rg;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate_grad(int node_id, const Array& g) {
    Node& n = nodes_[node_id];
    if (!n.requires_grad) return;
    if (!n.grad_live) {
        n.grad = Array(n.value.shape, 0.0);
        n.grad_live = true;
    }
    if (g.shape != n.grad.shape) {
        throw std::invalid_argument("accumulate_grad: shape mismatch " + shape_str(g.shape) +
                                    " vs " + shape_str(n.grad.shape));
    }
    for (std::size_t i = 0; i < g.numel(); ++i) n.grad.data[i] += g.data[i];
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape() != this) throw std::invalid_argument("backward: loss from a different tape");
    if (value_of(loss).numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(value_of(loss).shape));
    }
    if (ran_backward_) throw std::logic_error("backward: tape already consumed");
    ran_backward_ = true;
    if (!nodes_[loss.id()].requires_grad) return;  // loss independent of all leaves
    accumulate_grad(loss.id(), Array(value_of(loss).shape, 1.0));
    for (int i = loss.id(); i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad_live && n.backward) n.backward(*this, n.grad);
    }
    for (Node& n : nodes_) {
        if (n.param && n.grad_live) {
            for (std::size_t i = 0; i < n.grad.numel(); ++i) n.param->grad.data[i] += n.grad.data[i];
        }
    }
}

Array Tape::grad_of(const Tensor& t) const {
    const Node& n = nodes_[t.id()];
    if (n.grad_live) return n.grad;
    return Array(n.value.shape, 0.0);
}

// ---- binary elementwise ----

Tensor add(Tensor a, Tensor b) {
    Tape& tp = *a.tape();
    Array out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x + y; });
    check_finite(out, "add");
    return tp.make_node(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        if (t.requires_grad(a)) t.accumulate_grad(a.id(), reduce_to_shape(g, a.shape()));
        if (t.requires_grad(b)) t.accumulate_grad(b.id(), reduce_to_shape(g, b.shape()));
    });
}

Tensor sub(Tensor a, Tensor b) {
    Tape& tp = *a.tape();
    Array out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x - y; });
    check_finite(out, "sub");
    return tp.make_node(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        if (t.requires_grad(a)) t.accumulate_grad(a.id(), reduce_to_shape(g, a.shape()));
        if (t.requires_grad(b)) {
            Array gb = reduce_to_shape(g, b.shape());
            for (double& v : gb.data) v = -v;
            t.accumulate_grad(b.id(), gb);
        }
    });
}

Tensor mul(Tensor a, Tensor b) {
    Tape& tp = *a.tape();
    Array out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x * y; });
    check_finite(out, "mul");
    return tp.make_node(std::move(out), {a, b}, [a, b](Tape& t, const Array& g) {
        const Array& av = a.value();
        const Array& bv = b.value();
        if (t.requires_grad(a)) {
            t.accumulate_grad(a.id(), broadcast_backward(g, av, bv, av.shape,
                                                         [](double gg, double, double y) { return gg * y; }));
        }
        if (t.requires_grad(b)) {
            t.accumulate_grad(b.id(), broadcast_backward(g, av, bv, bv.shape,
                                                         [](double gg, double x, double) { return gg * x; }));
        }
    });
}

// ---- unary elementwise ----

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(Tensor a, const char* name, Fwd fwd, Bwd bwd) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    Array out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = fwd(av.data[i]);
    check_finite(out, name);
    Array saved = out;  // most backward rules below are cheapest in terms of the output
    return tp.make_node(std::move(out), {a}, [a, saved = std::move(saved), bwd](Tape& t, const Array& g) {
        const Array& x = a.value();
        Array ga(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) ga.data[i] = g.data[i] * bwd(x.data[i], saved.data[i]);
        t.accumulate_grad(a.id(), ga);
    });
}

}  // namespace

Tensor neg(Tensor a) {
    return unary_op(a, "neg", [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor exp_op(Tensor a) {
    return unary_op(a, "exp", [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Tensor sigmoid(Tensor a) {
    return unary_op(a, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(Tensor a) {
    return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor silu(Tensor a) {
    return unary_op(a, "silu", [](double x) { return x * stable_sigmoid(x); },
                    [](double x, double) {
                        double s = stable_sigmoid(x);
                        return s * (1.0 + x * (1.0 - s));
                    });
}

Tensor softplus(Tensor a) {
    return unary_op(a, "softplus", stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Tensor affine(Tensor a, double scale, double shift) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    Array out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = scale * av.data[i] + shift;
    check_finite(out, "affine");
    return tp.make_node(std::move(out), {a}, [a, scale](Tape& t, const Array& g) {
        Array ga(g.shape);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] = scale * g.data[i];
        t.accumulate_grad(a.id(), ga);
    });
}

// ---- matmul ----

namespace {

// c (m,n) += a (m,k) . b (k,n), raw row-major blocks
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

Tensor matmul(Tensor a, Tensor b) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.rank() < 2 || bv.rank() != 2) {
        throw std::invalid_argument("matmul: need a rank>=2 and b rank 2, got " +
                                    shape_str(av.shape) + " x " + shape_str(bv.shape));
    }
    std::size_t k = av.shape[av.rank() - 1];
    std::size_t m = av.shape[av.rank() - 2];
    if (bv.shape[0] != k) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(av.shape) +
                                    " x " + shape_str(bv.shape));
    }
    std::size_t n = bv.shape[1];
    std::size_t batch = av.numel() / (m * k);
    Shape os = av.shape;
    os.back() = n;
    Array out(os, 0.0);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        gemm_acc(av.data.data() + bi * m * k, bv.data.data(), out.data.data() + bi * m * n, m, k, n);
    }
    check_finite(out, "matmul");
    return tp.make_node(std::move(out), {a, b}, [a, b, m, k, n, batch](Tape& t, const Array& g) {
        const Array& avv = a.value();
        const Array& bvv = b.value();
        if (t.requires_grad(a)) {
            // ga = g . b^T
            Array ga(avv.shape, 0.0);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const double* gp = g.data.data() + bi * m * n;
                double* gap = ga.data.data() + bi * m * k;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        double gv = gp[i * n + j];
                        if (gv == 0.0) continue;
                        const double* brow = bvv.data.data() + j;  // column j of b
                        for (std::size_t p = 0; p < k; ++p) gap[i * k + p] += gv * brow[p * n];
                    }
            }
            t.accumulate_grad(a.id(), ga);
        }
        if (t.requires_grad(b)) {
            // gb = sum_batch a^T . g
            Array gb(bvv.shape, 0.0);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const double* ap = avv.data.data() + bi * m * k;
                const double* gp = g.data.data() + bi * m * n;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double avl = ap[i * k + p];
                        if (avl == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) gb.data[p * n + j] += avl * gp[i * n + j];
                    }
            }
            t.accumulate_grad(b.id(), gb);
        }
    });
}

Tensor sum(Tensor a) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    double s = 0.0;
    for (double v : av.data) s += v;
    Array out = Array::scalar(s);
    check_finite(out, "sum");
    return tp.make_node(std::move(out), {a}, [a](Tape& t, const Array& g) {
        Array ga(a.shape(), g.data[0]);
        t.accumulate_grad(a.id(), ga);
    });
}

Tensor mse_loss(Tensor pred, Tensor target) {
    Tape& tp = *pred.tape();
    const Array& p = pred.value();
    const Array& y = target.value();
    if (p.shape != y.shape) {
        throw std::invalid_argument("mse_loss: shape mismatch " + shape_str(p.shape) + " vs " +
                                    shape_str(y.shape));
    }
    std::size_t n = p.numel();
    if (n == 0) throw std::invalid_argument("mse_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = p.data[i] - y.data[i];
        s += d * d;
    }
    Array out = Array::scalar(s / static_cast<double>(n));
    check_finite(out, "mse_loss");
    return tp.make_node(std::move(out), {pred, target}, [pred, target, n](Tape& t, const Array& g) {
        const Array& pv = pred.value();
        const Array& yv = target.value();
        double scale = 2.0 * g.data[0] / static_cast<double>(n);
        if (t.requires_grad(pred)) {
            Array gp(pv.shape);
            for (std::size_t i = 0; i < n; ++i) gp.data[i] = scale * (pv.data[i] - yv.data[i]);
            t.accumulate_grad(pred.id(), gp);
        }
        if (t.requires_grad(target)) {
            Array gy(yv.shape);
            for (std::size_t i = 0; i < n; ++i) gy.data[i] = -scale * (pv.data[i] - yv.data[i]);
            t.accumulate_grad(target.id(), gy);
        }
    });
}

// ---- structural ----

Tensor reshape(Tensor a, Shape s) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    if (shape_numel(s) != av.numel()) {
        throw std::invalid_argument("reshape: numel mismatch " + shape_str(av.shape) + " -> " +
                                    shape_str(s));
    }
    Array out(s, av.data);
    return tp.make_node(std::move(out), {a}, [a](Tape& t, const Array& g) {
        Array ga(a.shape(), g.data);
        t.accumulate_grad(a.id(), ga);
    });
}

Tensor slice_last(Tensor a, std::size_t start, std::size_t len) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    if (av.rank() == 0) throw std::invalid_argument("slice_last: scalar input");
    std::size_t d = av.shape.back();
    if (start + len > d) throw std::invalid_argument("slice_last: range out of bounds");
    std::size_t rows = av.numel() / d;
    Shape os = av.shape;
    os.back() = len;
    Array out(os);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < len; ++j) out.data[r * len + j] = av.data[r * d + start + j];
    return tp.make_node(std::move(out), {a}, [a, start, len, d, rows](Tape& t, const Array& g) {
        Array ga(a.shape(), 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < len; ++j) ga.data[r * d + start + j] = g.data[r * len + j];
        t.accumulate_grad(a.id(), ga);
    });
}

Tensor concat_last(Tensor a, Tensor b) {
    Tape& tp = *a.tape();
    const Array& av = a.value();
    const Array& bv = b.value();
    if (av.rank() != bv.rank() || av.rank() == 0) {
        throw std::invalid_argument("concat_last: rank mismatch");
    }
    for (std::size_t i = 0; i + 1 < av.rank(); ++i) {
        if (av.shape[i] != bv.shape[i]) throw std::invalid_argument("concat_last: leading dims differ");
    }
    std::size_t da = av.shape.back(), db = bv.shape.back();
    std::size_t rows = da == 0 ? 0 : av.numel() / da;
    if (rows == 0 && bv.numel() > 0) rows = bv.numel() / db;
    Shape os = av.shape;
    os.back() = da + db;
    Array out(os);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < da; ++j) out.data[r * (da + db) + j] = av.data[r * da + j];
        for (std::size_t j = 0; j < db; ++j) out.data[r * (da + db) + da + j] = bv.data[r * db + j];
    }
    return tp.make_node(std::move(out), {a, b}, [a, b, da, db, rows](Tape& t, const Array& g) {
        if (t.requires_grad(a)) {
            Array ga(a.shape());
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < da; ++j) ga.data[r * da + j] = g.data[r * (da + db) + j];
            t.accumulate_grad(a.id(), ga);
        }
        if (t.requires_grad(b)) {
            Array gb(b.shape());
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < db; ++j)
                    gb.data[r * db + j] = g.data[r * (da + db) + da + j];
            t.accumulate_grad(b.id(), gb);
        }
    });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
    Tape& tp = *rows[0].tape();
    const Shape& rs = rows[0].shape();
    std::size_t per = rows[0].value().numel();
    Shape os;
    os.push_back(rows.size());
    for (std::size_t d : rs) os.push_back(d);
    Array out(os);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Array& rv = rows[i].value();
        if (rv.shape != rs) throw std::invalid_argument("stack_rows: inconsistent row shapes");
        std::memcpy(out.data.data() + i * per, rv.data.data(), per * sizeof(double));
    }
    return tp.make_node(std::move(out), rows, [rows, per](Tape& t, const Array& g) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!t.requires_grad(rows[i])) continue;
            Array gr(rows[i].shape());
            std::memcpy(gr.data.data(), g.data.data() + i * per, per * sizeof(double));
            t.accumulate_grad(rows[i].id(), gr);
        }
    });
}

Tensor rms_norm(Tensor x, Tensor weight, double eps) {
    Tape& tp = *x.tape();
    const Array& xv = x.value();
    const Array& wv = weight.value();
    if (xv.rank() == 0 || wv.rank() != 1 || wv.shape[0] != xv.shape.back()) {
        throw std::invalid_argument("rms_norm: weight must match last dim of x");
    }
    std::size_t d = xv.shape.back();
    std::size_t rows = xv.numel() / d;
    Array out(xv.shape);
    Array inv_rms({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data.data() + r * d;
        double ms = 0.0;
        for (std::size_t j = 0; j < d; ++j) ms += xr[j] * xr[j];
        double inv = 1.0 / std::sqrt(ms / static_cast<double>(d) + eps);
        inv_rms.data[r] = inv;
        for (std::size_t j = 0; j < d; ++j) out.data[r * d + j] = xr[j] * inv * wv.data[j];
    }
    check_finite(out, "rms_norm");
    return tp.make_node(std::move(out), {x, weight},
                        [x, weight, d, rows, inv_rms = std::move(inv_rms)](Tape& t, const Array& g) {
                            const Array& xv2 = x.value();
                            const Array& wv2 = weight.value();
                            if (t.requires_grad(x)) {
                                Array gx(xv2.shape);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    const double* xr = xv2.data.data() + r * d;
                                    const double* gr = g.data.data() + r * d;
                                    double inv = inv_rms.data[r];
                                    double dot = 0.0;
                                    for (std::size_t j = 0; j < d; ++j) dot += gr[j] * wv2.data[j] * xr[j];
                                    double c = dot * inv * inv * inv / static_cast<double>(d);
                                    for (std::size_t j = 0; j < d; ++j)
                                        gx.data[r * d + j] = gr[j] * wv2.data[j] * inv - xr[j] * c;
                                }
                                t.accumulate_grad(x.id(), gx);
                            }
                            if (t.requires_grad(weight)) {
                                Array gw(wv2.shape, 0.0);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    const double* xr = xv2.data.data() + r * d;
                                    const double* gr = g.data.data() + r * d;
                                    double inv = inv_rms.data[r];
                                    for (std::size_t j = 0; j < d; ++j) gw.data[j] += gr[j] * xr[j] * inv;
                                }
                                t.accumulate_grad(weight.id(), gw);
                            }
                        });
}

Tensor causal_conv1d(Tensor x, Tensor w, Tensor b) {
    Tape& tp = *x.tape();
    const Array& xv = x.value();
    const Array& wv = w.value();
    const Array& bv = b.value();
    if (xv.rank() != 3 || wv.rank() != 2 || bv.rank() != 1) {
        throw std::invalid_argument("causal_conv1d: expect x (B,L,C), w (C,K), b (C)");
    }
    std::size_t B = xv.shape[0], L = xv.shape[1], C = xv.shape[2], K = wv.shape[1];
    if (wv.shape[0] != C || bv.shape[0] != C) {
        throw std::invalid_argument("causal_conv1d: channel mismatch");
    }
    Array out(xv.shape);
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t c = 0; c < C; ++c) {
                double acc = bv.data[c];
                for (std::size_t kk = 0; kk < K; ++kk) {
                    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) -
                                         static_cast<std::ptrdiff_t>(K - 1) +
                                         static_cast<std::ptrdiff_t>(kk);
                    if (src < 0) continue;  // zero left padding
                    acc += wv.data[c * K + kk] * xv.data[(bi * L + static_cast<std::size_t>(src)) * C + c];
                }
                out.data[(bi * L + l) * C + c] = acc;
            }
    check_finite(out, "causal_conv1d");
    return tp.make_node(std::move(out), {x, w, b}, [x, w, b, B, L, C, K](Tape& t, const Array& g) {
        const Array& xv2 = x.value();
        const Array& wv2 = w.value();
        if (t.requires_grad(x)) {
            Array gx(xv2.shape, 0.0);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t l = 0; l < L; ++l)
                    for (std::size_t c = 0; c < C; ++c) {
                        double gv = g.data[(bi * L + l) * C + c];
                        if (gv == 0.0) continue;
                        for (std::size_t kk = 0; kk < K; ++kk) {
                            std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) -
                                                 static_cast<std::ptrdiff_t>(K - 1) +
                                                 static_cast<std::ptrdiff_t>(kk);
                            if (src < 0) continue;
                            gx.data[(bi * L + static_cast<std::size_t>(src)) * C + c] +=
                                gv * wv2.data[c * K + kk];
                        }
                    }
            t.accumulate_grad(x.id(), gx);
        }
        if (t.requires_grad(w)) {
            Array gw(wv2.shape, 0.0);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t l = 0; l < L; ++l)
                    for (std::size_t c = 0; c < C; ++c) {
                        double gv = g.data[(bi * L + l) * C + c];
                        if (gv == 0.0) continue;
                        for (std::size_t kk = 0; kk < K; ++kk) {
                            std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) -
                                                 static_cast<std::ptrdiff_t>(K - 1) +
                                                 static_cast<std::ptrdiff_t>(kk);
                            if (src < 0) continue;
                            gw.data[c * K + kk] +=
                                gv * xv2.data[(bi * L + static_cast<std::size_t>(src)) * C + c];
                        }
                    }
            t.accumulate_grad(w.id(), gw);
        }
        if (t.requires_grad(b)) {
            Array gb(b.shape(), 0.0);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t l = 0; l < L; ++l)
                    for (std::size_t c = 0; c < C; ++c) gb.data[c] += g.data[(bi * L + l) * C + c];
            t.accumulate_grad(b.id(), gb);
        }
    });
}

double grad_check(const std::function<Tensor(Tape&, Tensor)>& f, const Array& x, double h) {
    if (h < 1e-6 || h > 1e-4) throw std::invalid_argument("grad_check: h must lie in [1e-6, 1e-4]");
    Array analytic;
    {
        Tape tape;
        Tensor xt = tape.leaf(x, true);
        Tensor loss = f(tape, xt);
        if (loss.value().numel() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
        tape.backward(loss);
        analytic = tape.grad_of(xt);
    }
    auto eval = [&](const Array& xv) {
        Tape tape(false);
        Tensor xt = tape.leaf(xv, false);
        Tensor out = f(tape, xt);
        return out.value().data[0];
    };
    double max_err = 0.0;
    Array xp = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double orig = xp.data[i];
        xp.data[i] = orig + h;
        double fp = eval(xp);
        xp.data[i] = orig - h;
        double fm = eval(xp);
        xp.data[i] = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic.data[i];
        double denom = std::max({1e-6, std::fabs(a), std::fabs(numeric)});
        max_err = std::max(max_err, std::fabs(a - numeric) / denom);
    }
    return max_err;
}

}  // namespace camrl::num
