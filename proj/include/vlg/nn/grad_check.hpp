#pragma once

#include <functional>
#include <optional>
#include <string>

#include "vlg/nn/tape.hpp"

namespace vlg::nn {

using LossFn = std::function<Var(Tape&)>;

// Test hook: perturbs one analytic gradient entry before comparison.
struct GradFault {
    std::size_t param = 0;
    std::size_t element = 0;
    double delta = 1.0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_element = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

// Compares reverse-mode gradients with central differences element-wise.
// rel = |a − n| / max(|a|, |n|, floor); the floor keeps entries that are zero
// in both from dividing by zero.
GradCheckResult grad_check(const LossFn& loss, const ParameterList& params, double h = 1e-5,
                           double floor = 1e-6, std::optional<GradFault> fault = std::nullopt);

}  // namespace vlg::nn
