#include "vlg/nn/tape.hpp"

#include <cmath>
#include <string>

#include "vlg/common/errors.hpp"

namespace vlg::nn {

namespace {

std::string shape(const Tensor2& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

}  // namespace

void zero_grads(const ParameterList& params) {
    for (Parameter* p : params) p->zero_grad();
}

void polyak_update(const ParameterList& dst, const ParameterList& src, double tau) {
    if (dst.size() != src.size()) throw ConfigError("polyak_update: parameter count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        require_same_shape(dst[i]->value, src[i]->value, "polyak_update");
        dst[i]->value = (1.0 - tau) * dst[i]->value + tau * src[i]->value;
    }
}

void copy_values(const ParameterList& dst, const ParameterList& src) {
    if (dst.size() != src.size()) throw ConfigError("copy_values: parameter count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        require_same_shape(dst[i]->value, src[i]->value, "copy_values");
        dst[i]->value = src[i]->value;
    }
}

const Tensor2& Tape::val(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ref ? *n.ref : n.value;
}

void Tape::check(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw UsageError("Var does not belong to this tape");
}

const Tensor2& Tape::value(Var v) const {
    check(v);
    return val(v.id);
}

double Tape::scalar(Var v) const {
    const Tensor2& t = value(v);
    if (t.size() != 1) throw ConfigError("scalar(): value is " + shape(t));
    return t(0, 0);
}

Tensor2& Tape::grad_of(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
        const Tensor2& v = val(id);
        n.grad = Tensor2::Zero(v.rows(), v.cols());
    }
    return n.grad;
}

Var Tape::push(Tensor2 value, std::initializer_list<Var> parents, Backward bw) {
    std::vector<int> ids;
    ids.reserve(parents.size());
    for (Var p : parents) ids.push_back(p.id);
    return push(std::move(value), ids, std::move(bw));
}

Var Tape::push(Tensor2 value, const std::vector<int>& parents, Backward bw) {
    Node n;
    n.value = std::move(value);
    if (record_) {
        for (int p : parents) n.requires_grad = n.requires_grad || needs(p);
        if (n.requires_grad) {
            n.parents = parents;
            n.backward = std::move(bw);
        }
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor2 value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Parameter& p) {
    if (auto it = leaves_.find(&p); it != leaves_.end()) return Var{it->second};
    Node n;
    n.ref = &p.value;
    n.param = &p;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size()) - 1;
    leaves_.emplace(&p, id);
    return Var{id};
}

void Tape::backward(Var out, double seed) {
    check(out);
    if (!record_) throw UsageError("backward() on a non-recording tape");
    if (val(out.id).size() != 1) throw ConfigError("backward(): output must be 1x1");
    if (!needs(out.id)) return;
    for (Node& n : nodes_) n.grad.resize(0, 0);
    grad_of(out.id)(0, 0) = seed;
    for (int id = out.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, id);
    }
    for (Node& n : nodes_) {
        if (n.param && n.grad.size() != 0) {
            if (n.param->grad.rows() != n.grad.rows() || n.param->grad.cols() != n.grad.cols())
                n.param->zero_grad();
            n.param->grad += n.grad;
        }
    }
}

Var Tape::matmul(Var a, Var b) {
    check(a), check(b);
    const Tensor2& A = val(a.id);
    const Tensor2& B = val(b.id);
    if (A.cols() != B.rows()) throw ConfigError("matmul: " + shape(A) + " · " + shape(B));
    Tensor2 C = A * B;
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id).noalias() += G * t.val(b.id).transpose();
        if (t.needs(b.id)) t.grad_of(b.id).noalias() += t.val(a.id).transpose() * G;
    });
}

Var Tape::matmul_bt(Var a, Var b) {
    check(a), check(b);
    const Tensor2& A = val(a.id);
    const Tensor2& B = val(b.id);
    if (A.cols() != B.cols()) throw ConfigError("matmul_bt: " + shape(A) + " · (" + shape(B) + ")ᵀ");
    Tensor2 C = A * B.transpose();
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id).noalias() += G * t.val(b.id);
        if (t.needs(b.id)) t.grad_of(b.id).noalias() += G.transpose() * t.val(a.id);
    });
}

Var Tape::add(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "add");
    Tensor2 C = val(a.id) + val(b.id);
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id) += G;
        if (t.needs(b.id)) t.grad_of(b.id) += G;
    });
}

Var Tape::sub(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "sub");
    Tensor2 C = val(a.id) - val(b.id);
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id) += G;
        if (t.needs(b.id)) t.grad_of(b.id) -= G;
    });
}

Var Tape::mul(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "mul");
    Tensor2 C = val(a.id).cwiseProduct(val(b.id));
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id) += G.cwiseProduct(t.val(b.id));
        if (t.needs(b.id)) t.grad_of(b.id) += G.cwiseProduct(t.val(a.id));
    });
}

Var Tape::add_row(Var a, Var row) {
    check(a), check(row);
    const Tensor2& A = val(a.id);
    const Tensor2& R = val(row.id);
    if (R.rows() != 1 || R.cols() != A.cols())
        throw ConfigError("add_row: " + shape(A) + " + row " + shape(R));
    Tensor2 C = A.rowwise() + R.row(0);
    return push(std::move(C), {a, row}, [a, row](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id)) t.grad_of(a.id) += G;
        if (t.needs(row.id)) t.grad_of(row.id) += G.colwise().sum();
    });
}

Var Tape::mul_row(Var a, Var row) {
    check(a), check(row);
    const Tensor2& A = val(a.id);
    const Tensor2& R = val(row.id);
    if (R.rows() != 1 || R.cols() != A.cols())
        throw ConfigError("mul_row: " + shape(A) + " ⊙ row " + shape(R));
    Tensor2 C = A.array().rowwise() * R.row(0).array();
    return push(std::move(C), {a, row}, [a, row](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        if (t.needs(a.id))
            t.grad_of(a.id).array() += G.array().rowwise() * t.val(row.id).row(0).array();
        if (t.needs(row.id)) t.grad_of(row.id) += G.cwiseProduct(t.val(a.id)).colwise().sum();
    });
}

Var Tape::scale(Var a, double c) {
    check(a);
    Tensor2 C = c * val(a.id);
    return push(std::move(C), {a}, [a, c](Tape& t, int self) {
        t.grad_of(a.id) += c * t.grad_ref(self);
    });
}

Var Tape::relu(Var a) {
    check(a);
    Tensor2 C = val(a.id).cwiseMax(0.0);
    return push(std::move(C), {a}, [a](Tape& t, int self) {
        const Tensor2& X = t.val(a.id);
        t.grad_of(a.id).array() += (X.array() > 0.0).select(t.grad_ref(self).array(), 0.0);
    });
}

Var Tape::square(Var a) {
    check(a);
    Tensor2 C = val(a.id).array().square();
    return push(std::move(C), {a}, [a](Tape& t, int self) {
        t.grad_of(a.id).array() += 2.0 * t.val(a.id).array() * t.grad_ref(self).array();
    });
}

Var Tape::exp(Var a) {
    check(a);
    Tensor2 C = val(a.id).array().exp();
    return push(std::move(C), {a}, [a](Tape& t, int self) {
        t.grad_of(a.id).array() += t.val(self).array() * t.grad_ref(self).array();
    });
}

Var Tape::minimum(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "minimum");
    Tensor2 C = val(a.id).cwiseMin(val(b.id));
    return push(std::move(C), {a, b}, [a, b](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        auto take_a = t.val(a.id).array() <= t.val(b.id).array();
        if (t.needs(a.id)) t.grad_of(a.id).array() += take_a.select(G.array(), 0.0);
        if (t.needs(b.id)) t.grad_of(b.id).array() += take_a.select(0.0, G.array());
    });
}

Var Tape::transpose(Var a) {
    check(a);
    Tensor2 C = val(a.id).transpose();
    return push(std::move(C), {a}, [a](Tape& t, int self) {
        t.grad_of(a.id) += t.grad_ref(self).transpose();
    });
}

Var Tape::softmax_rows(Var a) {
    check(a);
    const Tensor2& X = val(a.id);
    if (X.cols() == 0) throw ConfigError("softmax_rows: empty rows");
    Tensor2 Y = (X.colwise() - X.rowwise().maxCoeff()).array().exp();
    Y.array().colwise() /= Y.rowwise().sum().array();
    return push(std::move(Y), {a}, [a](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        const Tensor2& Y = t.val(self);
        Eigen::VectorXd dot = G.cwiseProduct(Y).rowwise().sum();
        t.grad_of(a.id).array() += Y.array() * (G.colwise() - dot).array();
    });
}

Var Tape::log_softmax_rows(Var a) {
    check(a);
    const Tensor2& X = val(a.id);
    if (X.cols() == 0) throw ConfigError("log_softmax_rows: empty rows");
    Eigen::VectorXd mx = X.rowwise().maxCoeff();
    Tensor2 shifted = X.colwise() - mx;
    Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
    Tensor2 Y = shifted.colwise() - lse;
    return push(std::move(Y), {a}, [a](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        Tensor2 P = t.val(self).array().exp();
        Eigen::VectorXd gs = G.rowwise().sum();
        t.grad_of(a.id) += G - Tensor2(P.array().colwise() * gs.array());
    });
}

Var Tape::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
    check(x), check(gamma), check(beta);
    const Tensor2& X = val(x.id);
    const Tensor2& Gm = val(gamma.id);
    const Tensor2& Bt = val(beta.id);
    if (Gm.rows() != 1 || Gm.cols() != X.cols() || Bt.rows() != 1 || Bt.cols() != X.cols())
        throw ConfigError("layer_norm_rows: scale/shift must be 1x" + std::to_string(X.cols()));
    const double n = static_cast<double>(X.cols());
    Eigen::VectorXd mu = X.rowwise().mean();
    Tensor2 centered = X.colwise() - mu;
    Eigen::VectorXd inv_std =
        ((centered.array().square().rowwise().sum() / n) + eps).rsqrt().matrix();
    Tensor2 xhat = centered.array().colwise() * inv_std.array();
    Tensor2 Y = (xhat.array().rowwise() * Gm.row(0).array()).rowwise() + Bt.row(0).array();
    // xhat and inv_std are needed again in backward; keep them alive in the closure.
    return push(std::move(Y), {x, gamma, beta},
                [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), n](Tape& t, int self) {
                    const Tensor2& G = t.grad_ref(self);
                    if (t.needs(gamma.id)) t.grad_of(gamma.id) += G.cwiseProduct(xhat).colwise().sum();
                    if (t.needs(beta.id)) t.grad_of(beta.id) += G.colwise().sum();
                    if (t.needs(x.id)) {
                        Tensor2 dxhat = G.array().rowwise() * t.val(gamma.id).row(0).array();
                        Eigen::VectorXd m1 = dxhat.rowwise().sum() / n;
                        Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / n;
                        Tensor2 inner = (dxhat.colwise() - m1) - Tensor2(xhat.array().colwise() * m2.array());
                        t.grad_of(x.id).array() += inner.array().colwise() * inv_std.array();
                    }
                });
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    check(a);
    const Tensor2& A = val(a.id);
    if (start < 0 || count < 0 || start + count > A.cols())
        throw ConfigError("slice_cols: out of range on " + shape(A));
    Tensor2 C = A.middleCols(start, count);
    return push(std::move(C), {a}, [a, start, count](Tape& t, int self) {
        t.grad_of(a.id).middleCols(start, count) += t.grad_ref(self);
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ConfigError("concat_cols: no inputs");
    Eigen::Index rows = val(parts[0].id).rows();
    Eigen::Index cols = 0;
    std::vector<int> ids;
    for (Var p : parts) {
        check(p);
        if (val(p.id).rows() != rows) throw ConfigError("concat_cols: row mismatch");
        cols += val(p.id).cols();
        ids.push_back(p.id);
    }
    Tensor2 C(rows, cols);
    Eigen::Index off = 0;
    for (Var p : parts) {
        const Tensor2& P = val(p.id);
        C.middleCols(off, P.cols()) = P;
        off += P.cols();
    }
    return push(std::move(C), ids, [ids](Tape& t, int self) {
        const Tensor2& G = t.grad_ref(self);
        Eigen::Index o = 0;
        for (int id : ids) {
            Eigen::Index c = t.val(id).cols();
            if (t.needs(id)) t.grad_of(id) += G.middleCols(o, c);
            o += c;
        }
    });
}

Var Tape::sum(Var a) {
    check(a);
    Tensor2 C(1, 1);
    C(0, 0) = val(a.id).sum();
    return push(std::move(C), {a}, [a](Tape& t, int self) {
        t.grad_of(a.id).array() += t.grad_ref(self)(0, 0);
    });
}

Var Tape::mean(Var a) {
    check(a);
    const double n = static_cast<double>(val(a.id).size());
    if (n == 0) throw ConfigError("mean: empty tensor");
    Tensor2 C(1, 1);
    C(0, 0) = val(a.id).sum() / n;
    return push(std::move(C), {a}, [a, n](Tape& t, int self) {
        t.grad_of(a.id).array() += t.grad_ref(self)(0, 0) / n;
    });
}

Var Tape::pick(Var a, Eigen::Index row, Eigen::Index col) {
    check(a);
    const Tensor2& A = val(a.id);
    if (row < 0 || col < 0 || row >= A.rows() || col >= A.cols())
        throw ConfigError("pick: index out of range on " + shape(A));
    Tensor2 C(1, 1);
    C(0, 0) = A(row, col);
    return push(std::move(C), {a}, [a, row, col](Tape& t, int self) {
        t.grad_of(a.id)(row, col) += t.grad_ref(self)(0, 0);
    });
}

}  // namespace vlg::nn
