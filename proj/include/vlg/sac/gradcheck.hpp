#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlg/nn/grad_check.hpp"
#include "vlg/policy/model.hpp"
#include "vlg/sim/library.hpp"

namespace vlg::sac {

struct MicroCheckOptions {
    int width = 16;
    int heads = 2;
    int boxes = 3;
    int grasps = 4;
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    // Denominator floor of the relative error. Central differences at h = 1e-5
    // carry about 1e-10 of roundoff, which dominates gradients near 1e-6.
    double floor = 1e-4;
    std::optional<nn::GradFault> fault;  // applied to every check
};

struct MicroCheck {
    policy::FusionMode mode;
    std::string loss;  // critic, actor, alpha, alpha_literal, kl
    nn::GradCheckResult result;
    bool passed = false;
};

// Finite-difference check of every training loss on one real observation cut
// down to N boxes and K grasps, for each fusion mode. Each loss is checked
// against the parameters it is differentiated for: the actor term treats the
// critics as constants, so it is checked on the policy head alone; the others
// on the whole online network (α terms on log α).
std::vector<MicroCheck> micro_grad_check(const sim::WorldData& world, const MicroCheckOptions& options = {});

}  // namespace vlg::sac
