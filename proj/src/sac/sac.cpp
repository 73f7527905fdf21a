#include "vlg/sac/sac.hpp"

#include <algorithm>
#include <cmath>

#include "vlg/common/errors.hpp"

namespace vlg::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (!t.obs || !t.next) throw UsageError("replay buffer: transition without observations");
    if (t.action < 0 || t.action >= t.obs->grasp_count())
        throw UsageError("replay buffer: action " + std::to_string(t.action) + " out of range for " +
                         std::to_string(t.obs->grasp_count()) + " grasps");
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw UsageError("replay buffer: sampling from an empty buffer");
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
    return out;
}

double entropy(const std::vector<double>& pi) {
    double h = 0.0;
    for (double p : pi)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

namespace {

double xlogx_weighted(const std::vector<double>& pi, double alpha) {
    // α·Σ π log π with 0·log 0 = 0
    double s = 0.0;
    for (double p : pi)
        if (p > 0.0) s += p * std::log(p);
    return alpha * s;
}

void check_lengths(const std::vector<double>& pi, const std::vector<double>& q1, const std::vector<double>& q2) {
    if (pi.empty() || pi.size() != q1.size() || pi.size() != q2.size())
        throw ConfigError("sac: policy and critic lengths differ");
}

}  // namespace

double soft_state_value(const std::vector<double>& pi, const std::vector<double>& q1, const std::vector<double>& q2,
                        double alpha) {
    check_lengths(pi, q1, q2);
    double v = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) v += pi[k] * std::min(q1[k], q2[k]);
    return v - xlogx_weighted(pi, alpha);
}

double critic_target(double reward, bool done, double gamma, double next_value) {
    return done ? reward : reward + gamma * next_value;
}

double actor_objective(const std::vector<double>& pi, const std::vector<double>& q1, const std::vector<double>& q2,
                       double alpha) {
    check_lengths(pi, q1, q2);
    double v = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) v -= pi[k] * std::min(q1[k], q2[k]);
    return v + xlogx_weighted(pi, alpha);
}

double alpha_objective(const std::vector<double>& pi, double log_alpha, double target_entropy, bool literal) {
    const double h = entropy(pi);
    if (literal) return std::exp(log_alpha) * h + target_entropy;
    return -log_alpha * (target_entropy - h);
}

std::vector<double> observation_prior(const policy::EncodedObservation& enc, const sim::Observation& obs,
                                      double temperature, double mapping_threshold) {
    const auto probs = encoder::ground_probabilities(enc.box_feats, enc.lang, temperature);
    return grasp::grounding_prior(probs, grasp::box_grasp_mapping(obs.boxes, obs.grasps, mapping_threshold));
}

namespace {

std::vector<double> values_of(const nn::Tensor2& t) { return std::vector<double>(t.data(), t.data() + t.size()); }

}  // namespace

LossTerms transition_losses(nn::Tape& tape, policy::FusionModel& model, nn::Parameter& log_alpha, const Transition& t,
                            const LossContext& ctx) {
    if (!ctx.encoder) throw ConfigError("sac: loss context has no encoder");
    const auto enc = policy::encode_observation(*t.obs, *ctx.encoder);
    const int K = enc.actions();

    LossTerms out;
    // target from the next state, value only
    double y = t.reward;
    if (!t.done) {
        const auto next = policy::encode_observation(*t.next, *ctx.encoder);
        nn::Tape vt(false);
        nn::Var s2 = policy::build_state(vt, model, next);
        const auto pi2 = values_of(vt.value(vt.softmax_rows(policy::policy_logits(vt, model, s2))));
        const auto q1t = values_of(vt.value(model.q1_target.forward(vt, s2)));
        const auto q2t = values_of(vt.value(model.q2_target.forward(vt, s2)));
        y = critic_target(t.reward, false, ctx.gamma, soft_state_value(pi2, q1t, q2t, ctx.alpha));
    }
    out.target = y;

    nn::Var s = policy::build_state(tape, model, enc);
    nn::Var logits = policy::policy_logits(tape, model, s);
    nn::Var log_pi = tape.log_softmax_rows(logits);
    nn::Var pi = tape.softmax_rows(logits);
    nn::Var q1 = model.q1.forward(tape, s);
    nn::Var q2 = model.q2.forward(tape, s);

    nn::Tensor2 yv = nn::Tensor2::Constant(1, 1, y);
    nn::Var e1 = tape.sub(tape.pick(q1, 0, t.action), tape.constant(yv));
    nn::Var e2 = tape.sub(tape.pick(q2, 0, t.action), tape.constant(yv));
    out.critic = tape.scale(tape.add(tape.square(e1), tape.square(e2)), 0.5);

    const nn::Tensor2 min_q = tape.value(q1).cwiseMin(tape.value(q2));
    out.actor = tape.sum(tape.mul(pi, tape.sub(tape.scale(log_pi, ctx.alpha), tape.constant(min_q))));

    const auto pi_values = values_of(tape.value(pi));
    out.entropy = entropy(pi_values);
    const double h_bar = target_entropy(ctx.target_entropy_ratio, K);
    nn::Var la = tape.leaf(log_alpha);
    if (ctx.alpha_literal) {
        out.alpha = tape.add(tape.scale(tape.exp(la), out.entropy), tape.constant(nn::Tensor2::Constant(1, 1, h_bar)));
    } else {
        out.alpha = tape.scale(la, -(h_bar - out.entropy));
    }

    if (ctx.beta > 0.0) {
        const auto prior = observation_prior(enc, *t.obs, ctx.temperature, ctx.mapping_threshold);
        out.kl = policy::kl_guided_loss(tape, logits, prior, ctx.direction);
    }
    return out;
}

Learner::Learner(policy::FusionModel& model, const SacConfig& config)
    : model_opt(nn::AdamConfig{.lr = config.lr}, model.online_params()),
      alpha_opt(nn::AdamConfig{.lr = config.lr}, {&log_alpha}) {
    log_alpha.value(0, 0) = std::log(config.alpha_init);
}

UpdateReport update_step(const std::vector<const Transition*>& batch, policy::FusionModel& model, Learner& learner,
                         const SacConfig& config, const LossContext& ctx_in) {
    if (batch.empty()) throw UsageError("update_step: empty batch");
    LossContext ctx = ctx_in;
    ctx.alpha = learner.alpha();
    ctx.gamma = config.gamma;
    ctx.target_entropy_ratio = config.target_entropy_ratio;
    ctx.alpha_literal = config.alpha_literal;

    auto online = model.online_params();
    nn::zero_grads(online);
    learner.log_alpha.zero_grad();

    const double inv = 1.0 / static_cast<double>(batch.size());
    UpdateReport rep;
    double kl_sum = 0.0;
    for (const Transition* t : batch) {
        nn::Tape tape;
        LossTerms terms = transition_losses(tape, model, learner.log_alpha, *t, ctx);
        nn::Var total = tape.add(terms.critic, terms.actor);
        // a fixed temperature has no loss; log α may even be −∞ when α = 0
        if (config.auto_alpha) total = tape.add(total, terms.alpha);
        if (terms.kl) {
            total = tape.add(total, tape.scale(*terms.kl, ctx.beta));
            kl_sum += tape.scalar(*terms.kl);
        }
        tape.backward(total, inv);
        rep.critic_loss += tape.scalar(terms.critic) * inv;
        rep.actor_loss += tape.scalar(terms.actor) * inv;
        if (config.auto_alpha) rep.alpha_loss += tape.scalar(terms.alpha) * inv;
        rep.entropy += terms.entropy * inv;
    }
    if (ctx.beta > 0.0) rep.kl = kl_sum * inv;
    for (double v : {rep.critic_loss, rep.actor_loss, rep.alpha_loss})
        if (!std::isfinite(v)) throw NumericError("update_step: non-finite loss");

    nn::adam_step(online, learner.model_opt);
    if (config.auto_alpha) nn::adam_step({&learner.log_alpha}, learner.alpha_opt);
    nn::polyak_update(model.target_params(), model.critic_params(), config.tau);
    rep.alpha = learner.alpha();
    return rep;
}

}  // namespace vlg::sac
