#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace vlg::nn {

// Dense row-major matrix of doubles. Vectors are 1×n rows.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A trainable tensor together with its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor2 value;
    Tensor2 grad;

    Parameter() = default;
    Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Tensor2::Zero(rows, cols)), grad(Tensor2::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

using ParameterList = std::vector<Parameter*>;

inline Tensor2 row_vector(const std::vector<double>& v) {
    Tensor2 t(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) t(0, static_cast<Eigen::Index>(i)) = v[i];
    return t;
}

inline bool all_finite(const Tensor2& t) { return t.allFinite(); }

void zero_grads(const ParameterList& params);

// dst ← (1−tau)·dst + tau·src, tensor by tensor.
void polyak_update(const ParameterList& dst, const ParameterList& src, double tau);
void copy_values(const ParameterList& dst, const ParameterList& src);

}  // namespace vlg::nn
