#include "vlg/nn/adam.hpp"

#include <cmath>
#include <string>

#include "vlg/common/errors.hpp"

namespace vlg::nn {

AdamState::AdamState(const AdamConfig& cfg, const ParameterList& params) : config(cfg) {
    for (const Parameter* p : params) {
        first.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
        second.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
    }
}

void adam_step(const ParameterList& params, AdamState& state) {
    if (params.size() != state.first.size())
        throw ConfigError("adam_step: state tracks " + std::to_string(state.first.size()) + " tensors, got " +
                          std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
            state.first[i].rows() != p.value.rows() || state.first[i].cols() != p.value.cols())
            throw ConfigError("adam_step: shape mismatch for " + p.name);
        if (!p.grad.allFinite()) {
            for (Eigen::Index k = 0; k < p.grad.size(); ++k)
                if (!std::isfinite(p.grad.data()[k]))
                    throw NumericError("adam_step: non-finite gradient in " + p.name + "[" + std::to_string(k) +
                                       "] = " + std::to_string(p.grad.data()[k]) + " at step " +
                                       std::to_string(state.step + 1));
        }
    }

    ++state.step;
    const AdamConfig& c = state.config;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.grad.isZero(0.0)) continue;
        Tensor2& m = state.first[i];
        Tensor2& v = state.second[i];
        m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
        v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
    }
}

}  // namespace vlg::nn
