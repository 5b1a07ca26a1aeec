#include "vsum/graph.hpp"

#include <cmath>

VSUM_NS_BEGIN

namespace {
constexpr Real kBceClampLo = Real(1e-7);
constexpr Real kBceClampHi = Real(1) - Real(1e-7);
}  // namespace

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    backward_done_ = false;  // new recording re-arms the tape
    return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_id(int id, const char* ctx) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) {
        throw StateError(std::string(ctx) + ": node id " + std::to_string(id) +
                         " not on this tape");
    }
}

int Graph::input(Tensor2 t) {
    Node n;
    n.op = Op::kInput;
    n.val = std::move(t);
    return push(std::move(n));
}

int Graph::input_ref(const Tensor2& t) {
    Node n;
    n.op = Op::kInput;
    n.ref = &t;
    return push(std::move(n));
}

int Graph::param(const std::string& name, const Tensor2& p) {
    Node n;
    n.op = Op::kParam;
    n.ref = &p;
    n.needs_grad = track_;
    const int id = push(std::move(n));
    params_.emplace_back(name, id);
    return id;
}

const Tensor2& Graph::value(int id) const {
    check_id(id, "value");
    return val_of(nodes_[static_cast<std::size_t>(id)]);
}

Tensor2 Graph::gradient(int id) const {
    check_id(id, "gradient");
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() > 0) return n.grad;
    const Tensor2& v = val_of(n);
    return Tensor2(v.rows, v.cols);
}

#define VSUM_BINARY_OP(method, opcode, kernel)                                   \
    int Graph::method(int a, int b) {                                            \
        check_id(a, #method);                                                    \
        check_id(b, #method);                                                    \
        Node n;                                                                  \
        n.op = opcode;                                                           \
        n.a = a;                                                                 \
        n.b = b;                                                                 \
        n.val = kernel(value(a), value(b));                                      \
        n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;             \
        return push(std::move(n));                                               \
    }

VSUM_BINARY_OP(matmul, Op::kMatMul, vsum::matmul)
VSUM_BINARY_OP(matmul_nt, Op::kMatMulNT, vsum::matmul_nt)
VSUM_BINARY_OP(add, Op::kAdd, vsum::add)
VSUM_BINARY_OP(add_broadcast, Op::kAddBroadcast, vsum::add_broadcast)
VSUM_BINARY_OP(elementwise_mul, Op::kMul, vsum::elementwise_mul)
VSUM_BINARY_OP(concat_cols, Op::kConcatCols, vsum::concat_cols)

#undef VSUM_BINARY_OP

#define VSUM_UNARY_OP(method, opcode, kernel)                 \
    int Graph::method(int a) {                                \
        check_id(a, #method);                                 \
        Node n;                                               \
        n.op = opcode;                                        \
        n.a = a;                                              \
        n.val = kernel(value(a));                             \
        n.needs_grad = nodes_[a].needs_grad;                  \
        return push(std::move(n));                            \
    }

VSUM_UNARY_OP(softmax_rows, Op::kSoftmax, vsum::softmax_rows)
VSUM_UNARY_OP(l2_normalize_rows, Op::kL2Norm, vsum::l2_normalize_rows)
VSUM_UNARY_OP(sigmoid, Op::kSigmoid, vsum::sigmoid)
VSUM_UNARY_OP(relu, Op::kRelu, vsum::relu)

#undef VSUM_UNARY_OP

int Graph::scale(int a, Real c) {
    check_id(a, "scale");
    Node n;
    n.op = Op::kScale;
    n.a = a;
    n.scalar = c;
    n.val = vsum::scale(value(a), c);
    n.needs_grad = nodes_[a].needs_grad;
    return push(std::move(n));
}

int Graph::layer_norm_rows(int a, int gain, int bias, Real eps) {
    check_id(a, "layer_norm_rows");
    check_id(gain, "layer_norm_rows");
    check_id(bias, "layer_norm_rows");
    Node n;
    n.op = Op::kLayerNorm;
    n.a = a;
    n.b = gain;
    n.c = bias;
    n.scalar = eps;
    n.val = vsum::layer_norm_rows(value(a), value(gain), value(bias), eps);
    n.needs_grad = nodes_[a].needs_grad || nodes_[gain].needs_grad || nodes_[bias].needs_grad;
    return push(std::move(n));
}

int Graph::dropout(int a, Real rate, Rng& rng, bool training) {
    check_id(a, "dropout");
    if (!training || rate == Real(0)) {
        if (!(rate >= Real(0) && rate < Real(1))) {
            throw DimensionError("dropout rate must be in [0, 1), got " + std::to_string(rate));
        }
        return a;
    }
    const Tensor2& x = value(a);
    const int mask = input(dropout_mask(x.rows, x.cols, rate, rng));
    return elementwise_mul(a, mask);
}

int Graph::sum(int a) {
    check_id(a, "sum");
    Node n;
    n.op = Op::kSum;
    n.a = a;
    Real acc = 0;
    for (Real x : value(a).v) acc += x;
    n.val = Tensor2(1, 1, acc);
    n.needs_grad = nodes_[a].needs_grad;
    return push(std::move(n));
}

int Graph::bce_loss(int pred, const std::vector<Real>& target) {
    check_id(pred, "bce_loss");
    const Tensor2& p = value(pred);
    if (p.size() != target.size()) {
        throw DimensionError("bce_loss: " + std::to_string(p.size()) + " predictions vs " +
                             std::to_string(target.size()) + " targets");
    }
    Node n;
    n.op = Op::kBce;
    n.a = pred;
    n.target = target;
    Real acc = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        Real pc = p.v[i];
        pc = pc < kBceClampLo ? kBceClampLo : (pc > kBceClampHi ? kBceClampHi : pc);
        acc += target[i] * std::log(pc) + (Real(1) - target[i]) * std::log(Real(1) - pc);
    }
    n.val = Tensor2(1, 1, -acc / Real(target.size()));
    n.needs_grad = nodes_[pred].needs_grad;
    return push(std::move(n));
}

int Graph::mse_loss(int pred, const std::vector<Real>& target) {
    check_id(pred, "mse_loss");
    const Tensor2& p = value(pred);
    if (p.size() != target.size()) {
        throw DimensionError("mse_loss: " + std::to_string(p.size()) + " predictions vs " +
                             std::to_string(target.size()) + " targets");
    }
    Node n;
    n.op = Op::kMse;
    n.a = pred;
    n.target = target;
    Real acc = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const Real d = p.v[i] - target[i];
        acc += d * d;
    }
    n.val = Tensor2(1, 1, acc / Real(target.size()));
    n.needs_grad = nodes_[pred].needs_grad;
    return push(std::move(n));
}

Tensor2& Graph::grad_buf(Node& n) {
    if (n.grad.size() == 0) {
        const Tensor2& v = val_of(n);
        n.grad = Tensor2(v.rows, v.cols);
    }
    return n.grad;
}

void Graph::propagate(Node& n) {
    const Tensor2& g = n.grad;
    switch (n.op) {
        case Op::kInput:
        case Op::kParam:
            break;
        case Op::kMatMul: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            if (na.needs_grad) {
                Tensor2 da = vsum::matmul_nt(g, val_of(nb));  // g * b^T
                Tensor2& buf = grad_buf(na);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += da.v[i];
            }
            if (nb.needs_grad) {
                // a^T * g accumulated directly
                const Tensor2& a = val_of(na);
                Tensor2& buf = grad_buf(nb);
                for (int k = 0; k < a.cols; ++k) {
                    for (int i = 0; i < a.rows; ++i) {
                        const Real aik = a.at(i, k);
                        if (aik == Real(0)) continue;
                        for (int j = 0; j < g.cols; ++j) {
                            buf.at(k, j) += aik * g.at(i, j);
                        }
                    }
                }
            }
            break;
        }
        case Op::kMatMulNT: {
            // out = a * b^T; da = g * b, db = g^T * a
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            if (na.needs_grad) {
                Tensor2 da = vsum::matmul(g, val_of(nb));
                Tensor2& buf = grad_buf(na);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += da.v[i];
            }
            if (nb.needs_grad) {
                const Tensor2& a = val_of(na);
                Tensor2& buf = grad_buf(nb);
                for (int j = 0; j < g.cols; ++j) {
                    for (int i = 0; i < g.rows; ++i) {
                        const Real gij = g.at(i, j);
                        if (gij == Real(0)) continue;
                        for (int k = 0; k < a.cols; ++k) {
                            buf.at(j, k) += gij * a.at(i, k);
                        }
                    }
                }
            }
            break;
        }
        case Op::kAdd: {
            for (int side : {n.a, n.b}) {
                Node& ni = nodes_[side];
                if (!ni.needs_grad) continue;
                Tensor2& buf = grad_buf(ni);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i];
            }
            break;
        }
        case Op::kAddBroadcast: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            if (na.needs_grad) {
                Tensor2& buf = grad_buf(na);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i];
            }
            if (nb.needs_grad) {
                Tensor2& buf = grad_buf(nb);
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < g.cols; ++j) {
                        buf.v[static_cast<std::size_t>(j)] += g.at(i, j);
                    }
                }
            }
            break;
        }
        case Op::kMul: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            if (na.needs_grad) {
                const Tensor2& b = val_of(nb);
                Tensor2& buf = grad_buf(na);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i] * b.v[i];
            }
            if (nb.needs_grad) {
                const Tensor2& a = val_of(na);
                Tensor2& buf = grad_buf(nb);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i] * a.v[i];
            }
            break;
        }
        case Op::kScale: {
            Node& na = nodes_[n.a];
            if (na.needs_grad) {
                Tensor2& buf = grad_buf(na);
                for (std::size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i] * n.scalar;
            }
            break;
        }
        case Op::kSoftmax: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& y = n.val;
            Tensor2& buf = grad_buf(na);
            for (int i = 0; i < y.rows; ++i) {
                Real dot = 0;
                for (int j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < y.cols; ++j) {
                    buf.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                }
            }
            break;
        }
        case Op::kL2Norm: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& x = val_of(na);
            const Tensor2& y = n.val;
            Tensor2& buf = grad_buf(na);
            for (int i = 0; i < x.rows; ++i) {
                Real sumsq = 0;
                for (int j = 0; j < x.cols; ++j) sumsq += x.at(i, j) * x.at(i, j);
                if (sumsq == Real(0)) continue;  // zero rows carry no gradient
                const Real inv_norm = Real(1) / std::sqrt(sumsq);
                Real dot = 0;
                for (int j = 0; j < x.cols; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < x.cols; ++j) {
                    buf.at(i, j) += (g.at(i, j) - y.at(i, j) * dot) * inv_norm;
                }
            }
            break;
        }
        case Op::kLayerNorm: {
            Node& na = nodes_[n.a];
            Node& ng = nodes_[n.b];
            Node& nb = nodes_[n.c];
            const Tensor2& x = val_of(na);
            const Tensor2& gain = val_of(ng);
            const Real inv_n = Real(1) / Real(x.cols);
            for (int i = 0; i < x.rows; ++i) {
                Real mean = 0;
                for (int j = 0; j < x.cols; ++j) mean += x.at(i, j);
                mean *= inv_n;
                Real var = 0;
                for (int j = 0; j < x.cols; ++j) {
                    const Real d = x.at(i, j) - mean;
                    var += d * d;
                }
                var *= inv_n;
                const Real inv_std = Real(1) / std::sqrt(var + n.scalar);
                if (ng.needs_grad || nb.needs_grad) {
                    Tensor2* gbuf = ng.needs_grad ? &grad_buf(ng) : nullptr;
                    Tensor2* bbuf = nb.needs_grad ? &grad_buf(nb) : nullptr;
                    for (int j = 0; j < x.cols; ++j) {
                        const Real xhat = (x.at(i, j) - mean) * inv_std;
                        if (gbuf) gbuf->v[static_cast<std::size_t>(j)] += g.at(i, j) * xhat;
                        if (bbuf) bbuf->v[static_cast<std::size_t>(j)] += g.at(i, j);
                    }
                }
                if (na.needs_grad) {
                    Tensor2& buf = grad_buf(na);
                    Real mean_gy = 0;
                    Real mean_gy_xhat = 0;
                    for (int j = 0; j < x.cols; ++j) {
                        const Real xhat = (x.at(i, j) - mean) * inv_std;
                        const Real gy = g.at(i, j) * gain.v[static_cast<std::size_t>(j)];
                        mean_gy += gy;
                        mean_gy_xhat += gy * xhat;
                    }
                    mean_gy *= inv_n;
                    mean_gy_xhat *= inv_n;
                    for (int j = 0; j < x.cols; ++j) {
                        const Real xhat = (x.at(i, j) - mean) * inv_std;
                        const Real gy = g.at(i, j) * gain.v[static_cast<std::size_t>(j)];
                        buf.at(i, j) += (gy - mean_gy - xhat * mean_gy_xhat) * inv_std;
                    }
                }
            }
            break;
        }
        case Op::kSigmoid: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& y = n.val;
            Tensor2& buf = grad_buf(na);
            for (std::size_t i = 0; i < buf.v.size(); ++i) {
                buf.v[i] += g.v[i] * y.v[i] * (Real(1) - y.v[i]);
            }
            break;
        }
        case Op::kRelu: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& x = val_of(na);
            Tensor2& buf = grad_buf(na);
            for (std::size_t i = 0; i < buf.v.size(); ++i) {
                if (x.v[i] > Real(0)) buf.v[i] += g.v[i];
            }
            break;
        }
        case Op::kConcatCols: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            const int ac = val_of(na).cols;
            if (na.needs_grad) {
                Tensor2& buf = grad_buf(na);
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < ac; ++j) buf.at(i, j) += g.at(i, j);
                }
            }
            if (nb.needs_grad) {
                Tensor2& buf = grad_buf(nb);
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < buf.cols; ++j) buf.at(i, j) += g.at(i, ac + j);
                }
            }
            break;
        }
        case Op::kSum: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            Tensor2& buf = grad_buf(na);
            const Real gs = g.v[0];
            for (Real& x : buf.v) x += gs;
            break;
        }
        case Op::kBce: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& p = val_of(na);
            Tensor2& buf = grad_buf(na);
            const Real gs = g.v[0] / Real(n.target.size());
            for (std::size_t i = 0; i < n.target.size(); ++i) {
                const Real pi = p.v[i];
                if (pi < kBceClampLo || pi > kBceClampHi) continue;  // flat in the clamp zone
                buf.v[i] += gs * (-n.target[i] / pi + (Real(1) - n.target[i]) / (Real(1) - pi));
            }
            break;
        }
        case Op::kMse: {
            Node& na = nodes_[n.a];
            if (!na.needs_grad) break;
            const Tensor2& p = val_of(na);
            Tensor2& buf = grad_buf(na);
            const Real gs = g.v[0] * Real(2) / Real(n.target.size());
            for (std::size_t i = 0; i < n.target.size(); ++i) {
                buf.v[i] += gs * (p.v[i] - n.target[i]);
            }
            break;
        }
    }
}

std::map<std::string, Tensor2> Graph::backward(int loss) {
    if (nodes_.empty()) {
        throw StateError("backward without a recorded forward pass");
    }
    if (backward_done_) {
        throw StateError("second backward pass without a new forward pass");
    }
    check_id(loss, "backward");
    {
        const Tensor2& lv = value(loss);
        if (lv.rows != 1 || lv.cols != 1) {
            throw StateError("backward: loss node must be scalar, got " + lv.shape_str());
        }
    }
    backward_done_ = true;

    Node& ln = nodes_[static_cast<std::size_t>(loss)];
    grad_buf(ln).v[0] = Real(1);
    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        propagate(n);
    }

    std::map<std::string, Tensor2> grads;
    for (const auto& [name, id] : params_) {
        grads.emplace(name, gradient(id));
    }
    return grads;
}

VSUM_NS_END
