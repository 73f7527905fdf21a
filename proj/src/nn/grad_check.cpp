#include "vlg/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "vlg/common/errors.hpp"

namespace vlg::nn {

namespace {

double evaluate(const LossFn& loss) {
    Tape tape(false);
    return tape.scalar(loss(tape));
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, const ParameterList& params, double h, double floor,
                           std::optional<GradFault> fault) {
    zero_grads(params);
    {
        Tape tape(true);
        Var out = loss(tape);
        tape.backward(out);
    }
    std::vector<Tensor2> analytic;
    analytic.reserve(params.size());
    for (const Parameter* p : params) analytic.push_back(p->grad);
    if (fault) {
        if (fault->param >= analytic.size() || fault->element >= static_cast<std::size_t>(analytic[fault->param].size()))
            throw ConfigError("grad_check: fault index out of range");
        analytic[fault->param].data()[fault->element] += fault->delta;
    }

    GradCheckResult result;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        for (Eigen::Index k = 0; k < p.value.size(); ++k) {
            double& x = p.value.data()[k];
            const double saved = x;
            x = saved + h;
            const double up = evaluate(loss);
            x = saved - h;
            const double down = evaluate(loss);
            x = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i].data()[k];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            ++result.checked;
            if (rel > result.max_rel_error || result.worst_param.empty()) {
                if (rel >= result.max_rel_error) {
                    result.max_rel_error = rel;
                    result.worst_param = p.name;
                    result.worst_element = static_cast<std::size_t>(k);
                    result.analytic = a;
                    result.numeric = numeric;
                }
            }
        }
    }
    zero_grads(params);
    return result;
}

}  // namespace vlg::nn
