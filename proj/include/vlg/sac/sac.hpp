#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "vlg/nn/adam.hpp"
#include "vlg/policy/model.hpp"
#include "vlg/sac/config.hpp"
#include "vlg/sim/episode.hpp"

namespace vlg::sac {

using ObservationPtr = std::shared_ptr<const sim::Observation>;

// Observations are shared so consecutive transitions of an episode hold one
// copy of their common state. Only raw observations are stored; features are
// recomputed at update time.
struct Transition {
    ObservationPtr obs;
    int action = 0;
    double reward = 0.0;
    ObservationPtr next;
    bool done = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);  // throws UsageError for an out-of-range action
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }
    // Uniform with replacement.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

// ---- plain formulas ------------------------------------------------------

double entropy(const std::vector<double>& pi);
// V(s') = πᵀ(min(q1, q2) − α·log π).
double soft_state_value(const std::vector<double>& pi, const std::vector<double>& q1, const std::vector<double>& q2,
                        double alpha);
// y = r + γ·(1 − done)·V(s').
double critic_target(double reward, bool done, double gamma, double next_value);
// πᵀ(α·log π − min(q1, q2)).
double actor_objective(const std::vector<double>& pi, const std::vector<double>& q1, const std::vector<double>& q2,
                       double alpha);
// Default: −log α·(H̄ − H(π)). Literal: πᵀ(−α·log π + H̄) = α·H(π) + H̄.
double alpha_objective(const std::vector<double>& pi, double log_alpha, double target_entropy, bool literal);
inline double target_entropy(double ratio, int actions) { return ratio * std::log(static_cast<double>(actions)); }

// ---- losses on the tape --------------------------------------------------

struct LossContext {
    const encoder::AlignedEncoder* encoder = nullptr;
    double alpha = 0.2;  // current temperature, a constant inside actor and critic terms
    double gamma = 0.99;
    double target_entropy_ratio = 0.5;
    bool alpha_literal = false;
    double beta = 0.0;  // guided-loss weight; 0 skips the KL term
    policy::KlDirection direction = policy::KlDirection::policy_to_prior;
    double temperature = encoder::kGroundingTemperature;
    double mapping_threshold = grasp::kMappingThreshold;
};

struct LossTerms {
    nn::Var critic;  // ½[(q1(a) − y)² + (q2(a) − y)²]
    nn::Var actor;   // πᵀ(α log π − min q), min q detached
    nn::Var alpha;   // on log α only
    std::optional<nn::Var> kl;
    double target = 0.0;
    double entropy = 0.0;
};

// Grounding prior over an observation's grasps.
std::vector<double> observation_prior(const policy::EncodedObservation& enc, const sim::Observation& obs,
                                      double temperature, double mapping_threshold);

// Builds every loss term for one transition on a recording tape. The target
// y is computed on a separate value-only pass through the online trunk and the
// target critics.
LossTerms transition_losses(nn::Tape& tape, policy::FusionModel& model, nn::Parameter& log_alpha,
                            const Transition& t, const LossContext& ctx);

// ---- update step ---------------------------------------------------------

struct Learner {
    nn::Parameter log_alpha{"log_alpha", 1, 1};
    nn::AdamState model_opt;
    nn::AdamState alpha_opt;

    Learner() = default;
    Learner(policy::FusionModel& model, const SacConfig& config);
    double alpha() const { return std::exp(log_alpha.value(0, 0)); }
};

struct UpdateReport {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha_loss = 0.0;
    std::optional<double> kl;
    double entropy = 0.0;
    double alpha = 0.0;  // after the step
};

// One gradient step on critics + actor (+ β·KL) through the shared trunk, one
// on log α, then Polyak averaging of the target critics. Losses are batch means.
UpdateReport update_step(const std::vector<const Transition*>& batch, policy::FusionModel& model, Learner& learner,
                         const SacConfig& config, const LossContext& ctx);

}  // namespace vlg::sac
