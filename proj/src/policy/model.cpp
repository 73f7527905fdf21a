#include "vlg/policy/model.hpp"

#include <cmath>

#include "vlg/common/errors.hpp"

namespace vlg::policy {

std::string to_string(FusionMode m) {
    switch (m) {
        case FusionMode::cross_attention: return "cross_attention";
        case FusionMode::position_as_key: return "position_as_key";
        case FusionMode::film: return "film";
    }
    return "?";
}

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "cross_attention") return FusionMode::cross_attention;
    if (s == "position_as_key") return FusionMode::position_as_key;
    if (s == "film") return FusionMode::film;
    throw ConfigError("unknown fusion mode '" + s + "' (cross_attention, position_as_key, film)");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"mode", to_string(mode)},
            {"width", attention.width},
            {"heads", attention.heads},
            {"layers", attention.layers},
            {"ffn_ratio", attention.ffn_ratio},
            {"scale", attention.scale},
            {"bands", bands}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.mode = fusion_mode_from_string(j.value("mode", to_string(c.mode)));
    c.attention.width = j.value("width", c.attention.width);
    c.attention.heads = j.value("heads", c.attention.heads);
    c.attention.layers = j.value("layers", c.attention.layers);
    c.attention.ffn_ratio = j.value("ffn_ratio", c.attention.ffn_ratio);
    c.attention.scale = j.value("scale", c.attention.scale);
    c.bands = j.value("bands", c.bands);
    c.attention.validate();
    if (c.bands < 1) throw ConfigError("model.bands must be at least 1");
    return c;
}

EncodedObservation encode_observation(const sim::Observation& obs, const encoder::AlignedEncoder& encoder,
                                      bool allow_fallback) {
    if (obs.boxes.empty()) throw ConfigError("build_state: observation has no boxes (N = 0)");
    if (obs.grasps.empty()) throw ConfigError("build_state: observation has no grasps (K = 0)");
    EncodedObservation e;
    e.box_feats = encoder.encode_boxes(obs.boxes, obs.noise_seed);
    e.lang = encoder.encode_text(obs.instruction, allow_fallback);
    for (const auto& b : obs.boxes) e.centers.push_back(b.center);
    e.grasps = obs.grasps;
    return e;
}

Var Head::forward(Tape& tape, Var state) { return tape.transpose(mlp.forward(tape, state)); }

FusionModel::FusionModel(const ModelConfig& cfg)
    : config(cfg),
      grasp_encoder("grasp", cfg.bands, cfg.attention.width),
      position("position", cfg.bands, cfg.attention.width),
      attention("attention", cfg.attention),
      policy("policy", cfg.attention.width),
      q1("q1", cfg.attention.width),
      q2("q2", cfg.attention.width),
      q1_target("q1_target", cfg.attention.width),
      q2_target("q2_target", cfg.attention.width) {
    cfg.attention.validate();
    if (cfg.mode == FusionMode::film) film = nn::Mlp("film", {cfg.attention.width, cfg.attention.width, 2 * cfg.attention.width});
}

void FusionModel::init(Rng& rng) {
    grasp_encoder.init(rng);
    position.init(rng);
    attention.init(rng);
    film.init(rng);
    policy.mlp.init(rng);
    q1.mlp.init(rng);
    q2.mlp.init(rng);
    nn::copy_values(target_params(), critic_params());
}

nn::ParameterList FusionModel::trunk_params() {
    nn::ParameterList out;
    grasp_encoder.collect(out);
    position.collect(out);
    attention.collect(out);
    film.collect(out);
    return out;
}

nn::ParameterList FusionModel::policy_params() {
    nn::ParameterList out;
    policy.mlp.collect(out);
    return out;
}

nn::ParameterList FusionModel::critic_params() {
    nn::ParameterList out;
    q1.mlp.collect(out);
    q2.mlp.collect(out);
    return out;
}

nn::ParameterList FusionModel::target_params() {
    nn::ParameterList out;
    q1_target.mlp.collect(out);
    q2_target.mlp.collect(out);
    return out;
}

nn::ParameterList FusionModel::online_params() {
    auto out = trunk_params();
    for (auto* p : policy_params()) out.push_back(p);
    for (auto* p : critic_params()) out.push_back(p);
    return out;
}

nn::ParameterList FusionModel::all_params() {
    auto out = online_params();
    for (auto* p : target_params()) out.push_back(p);
    return out;
}

Var build_state(Tape& tape, FusionModel& model, const EncodedObservation& obs, nn::AttentionWeights* weights) {
    if (obs.boxes() == 0) throw ConfigError("build_state: no boxes (N = 0)");
    if (obs.actions() == 0) throw ConfigError("build_state: no grasps (K = 0)");
    if (obs.box_feats.cols() != model.width())
        throw ConfigError("build_state: encoder width " + std::to_string(obs.box_feats.cols()) + " vs model width " +
                          std::to_string(model.width()));
    Var queries = model.grasp_encoder.forward(tape, obs.grasps);
    Var pos = model.position.forward(tape, obs.centers);
    const Tensor2& box_feats = obs.box_feats;
    const std::vector<double>& lang = obs.lang;
    Var boxes = tape.constant(box_feats);
    switch (model.config.mode) {
        case FusionMode::cross_attention: {
            Var values = tape.constant(encoder::fuse_visual_language(box_feats, lang));
            return nn::cross_attention_forward(tape, model.attention, queries, tape.add(boxes, pos), values, weights);
        }
        case FusionMode::position_as_key: {
            Var values = tape.constant(encoder::fuse_visual_language(box_feats, lang));
            return nn::cross_attention_forward(tape, model.attention, queries, pos, values, weights);
        }
        case FusionMode::film: {
            Var out = nn::cross_attention_forward(tape, model.attention, queries, tape.add(boxes, pos), boxes, weights);
            Var gb = model.film.forward(tape, tape.constant(encoder::row_of(lang)));
            const Eigen::Index d = model.width();
            Var gamma = tape.slice_cols(gb, 0, d), beta = tape.slice_cols(gb, d, d);
            return tape.add_row(tape.add(out, tape.mul_row(out, gamma)), beta);
        }
    }
    throw ConfigError("build_state: bad fusion mode");
}

Var policy_logits(Tape& tape, FusionModel& model, Var state) { return model.policy.forward(tape, state); }

namespace {

std::vector<double> row_values(const Tensor2& t) { return std::vector<double>(t.data(), t.data() + t.size()); }

}  // namespace

std::vector<double> policy_forward(FusionModel& model, const EncodedObservation& obs) {
    Tape tape(false);
    Var logits = policy_logits(tape, model, build_state(tape, model, obs));
    return row_values(tape.value(tape.softmax_rows(logits)));
}

CriticValues critic_forward(FusionModel& model, const EncodedObservation& obs, bool target) {
    Tape tape(false);
    Var s = build_state(tape, model, obs);
    Head& a = target ? model.q1_target : model.q1;
    Head& b = target ? model.q2_target : model.q2;
    return {row_values(tape.value(a.forward(tape, s))), row_values(tape.value(b.forward(tape, s)))};
}

int select_action(const std::vector<double>& probs, ActionMode mode, Rng& rng) {
    if (probs.empty()) throw ConfigError("select_action: empty distribution");
    if (mode == ActionMode::greedy) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = i;
        return static_cast<int>(best);
    }
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    // rounding left u above the running sum: last action with mass
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return static_cast<int>(i);
    return static_cast<int>(probs.size() - 1);
}

std::string to_string(KlDirection d) { return d == KlDirection::policy_to_prior ? "policy_to_prior" : "prior_to_policy"; }

KlDirection kl_direction_from_string(const std::string& s) {
    if (s == "policy_to_prior") return KlDirection::policy_to_prior;
    if (s == "prior_to_policy") return KlDirection::prior_to_policy;
    throw ConfigError("unknown KL direction '" + s + "' (policy_to_prior, prior_to_policy)");
}

double kl_guided_loss(const std::vector<double>& pi, const std::vector<double>& prior, KlDirection direction) {
    if (pi.size() != prior.size())
        throw ConfigError("kl_guided_loss: length " + std::to_string(pi.size()) + " vs " + std::to_string(prior.size()));
    const auto& p = direction == KlDirection::policy_to_prior ? pi : prior;
    const auto& q = direction == KlDirection::policy_to_prior ? prior : pi;
    double kl = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - std::log(q[k]));
    return kl;
}

Var kl_guided_loss(Tape& tape, Var logits, const std::vector<double>& prior, KlDirection direction) {
    const Tensor2& l = tape.value(logits);
    if (l.rows() != 1 || l.cols() != static_cast<Eigen::Index>(prior.size()))
        throw ConfigError("kl_guided_loss: logits 1x" + std::to_string(l.cols()) + " vs prior of length " +
                          std::to_string(prior.size()));
    Tensor2 log_prior(1, l.cols()), p(1, l.cols());
    for (std::size_t k = 0; k < prior.size(); ++k) {
        log_prior(0, static_cast<Eigen::Index>(k)) = std::log(prior[k]);
        p(0, static_cast<Eigen::Index>(k)) = prior[k];
    }
    Var log_pi = tape.log_softmax_rows(logits);
    if (direction == KlDirection::policy_to_prior) {
        Var pi = tape.softmax_rows(logits);
        return tape.sum(tape.mul(pi, tape.sub(log_pi, tape.constant(log_prior))));
    }
    return tape.sum(tape.mul(tape.constant(p), tape.sub(tape.constant(log_prior), log_pi)));
}

}  // namespace vlg::policy
