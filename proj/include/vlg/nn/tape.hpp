#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vlg/nn/tensor.hpp"

namespace vlg::nn {

// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff tape over Tensor2 values.
//
// A non-recording tape evaluates the same operations without keeping backward
// closures, which is how inference and target computations run. Parameters
// enter through leaf(); after backward() their gradients are added to
// Parameter::grad. One tape belongs to one thread.
class Tape {
public:
    explicit Tape(bool record = true) : record_(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return record_; }

    Var constant(Tensor2 value);
    Var leaf(Parameter& p);

    const Tensor2& value(Var v) const;
    double scalar(Var v) const;

    // Seeds d(out)/d(out) = seed for a 1×1 output and accumulates parameter grads.
    void backward(Var out, double seed = 1.0);

    Var matmul(Var a, Var b);     // a·b
    Var matmul_bt(Var a, Var b);  // a·bᵀ
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);        // element-wise
    Var add_row(Var a, Var row);  // broadcast a 1×c row over every row of a
    Var mul_row(Var a, Var row);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var square(Var a);
    Var exp(Var a);
    Var minimum(Var a, Var b);    // element-wise; ties route gradient to a
    Var transpose(Var a);
    Var softmax_rows(Var a);
    Var log_softmax_rows(Var a);
    Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
    Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
    Var concat_cols(std::span<const Var> parts);
    Var sum(Var a);
    Var mean(Var a);
    Var pick(Var a, Eigen::Index row, Eigen::Index col);

    std::size_t size() const { return nodes_.size(); }

private:
    using Backward = std::function<void(Tape&, int)>;

    struct Node {
        Tensor2 value;
        const Tensor2* ref = nullptr;
        Tensor2 grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        std::vector<int> parents;
        Backward backward;
    };

    Var push(Tensor2 value, std::initializer_list<Var> parents, Backward bw);
    Var push(Tensor2 value, const std::vector<int>& parents, Backward bw);
    Tensor2& grad_of(int id);
    const Tensor2& grad_ref(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    const Tensor2& val(int id) const;
    void check(Var v) const;

    bool record_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> leaves_;
};

}  // namespace vlg::nn
