#pragma once

#include <cstdint>
#include <vector>

#include "vlg/nn/tensor.hpp"

namespace vlg::nn {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::int64_t step = 0;
    std::vector<Tensor2> first;   // per parameter, shaped like it
    std::vector<Tensor2> second;

    AdamState() = default;
    AdamState(const AdamConfig& cfg, const ParameterList& params);
};

// Bias-corrected Adam over params[i]->grad, in place. A tensor whose gradient is
// entirely zero is left untouched (moments included), so a zero gradient is a
// no-op whatever the accumulated state. Throws NumericError naming the first
// non-finite gradient entry; nothing is modified in that case.
void adam_step(const ParameterList& params, AdamState& state);

}  // namespace vlg::nn
