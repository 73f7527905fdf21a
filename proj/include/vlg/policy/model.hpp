#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlg/encoder/encoder.hpp"
#include "vlg/grasp/features.hpp"
#include "vlg/nn/attention.hpp"
#include "vlg/sim/episode.hpp"

namespace vlg::policy {

using nn::Tape;
using nn::Tensor2;
using nn::Var;

enum class FusionMode { cross_attention, position_as_key, film };
std::string to_string(FusionMode m);
FusionMode fusion_mode_from_string(const std::string& s);

struct ModelConfig {
    FusionMode mode = FusionMode::cross_attention;
    nn::AttentionConfig attention;
    int bands = 6;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// Frozen-encoder outputs for one observation. Recomputed whenever needed;
// only the learned trunk turns them into a state.
struct EncodedObservation {
    Tensor2 box_feats;  // N×width
    std::vector<double> lang;
    std::vector<sim::Vec3> centers;
    std::vector<grasp::GraspPose> grasps;

    int boxes() const { return static_cast<int>(box_feats.rows()); }
    int actions() const { return static_cast<int>(grasps.size()); }
};

// Throws ConfigError when N = 0 or K = 0.
EncodedObservation encode_observation(const sim::Observation& obs, const encoder::AlignedEncoder& encoder,
                                      bool allow_fallback = false);

// Per-grasp MLP applied to every state row: d → d → 1.
struct Head {
    nn::Mlp mlp;

    Head() = default;
    Head(const std::string& name, int width) : mlp(name, {width, width, 1}) {}
    // 1×K row of outputs
    Var forward(Tape& tape, Var state);
};

struct FusionModel {
    ModelConfig config;
    grasp::GraspEncoder grasp_encoder;
    encoder::PositionEncoder position;
    nn::AttentionParams attention;
    nn::Mlp film;  // language → (γ, β); used only in film mode
    Head policy, q1, q2, q1_target, q2_target;

    explicit FusionModel(const ModelConfig& config);
    FusionModel(const FusionModel&) = delete;
    FusionModel& operator=(const FusionModel&) = delete;

    int width() const { return config.attention.width; }
    // Fresh parameters; target critics start as copies of the online ones.
    void init(Rng& rng);

    nn::ParameterList trunk_params();
    nn::ParameterList policy_params();
    nn::ParameterList critic_params();
    nn::ParameterList target_params();
    nn::ParameterList online_params();  // trunk + policy + critics
    nn::ParameterList all_params();     // online + targets, checkpoint order
};

// K×width cross-attention state.
//   cross_attention: Q = grasp MLP, K = box + pos MLP, V = box ⊙ lang
//   position_as_key: K = pos MLP alone
//   film:            V = box, then out ⊙ (1+γ) + β with (γ, β) = MLP(lang)
Var build_state(Tape& tape, FusionModel& model, const EncodedObservation& obs, nn::AttentionWeights* weights = nullptr);

Var policy_logits(Tape& tape, FusionModel& model, Var state);
std::vector<double> policy_forward(FusionModel& model, const EncodedObservation& obs);

struct CriticValues {
    std::vector<double> q1, q2;
};
CriticValues critic_forward(FusionModel& model, const EncodedObservation& obs, bool target = false);

enum class ActionMode { sample, greedy };
// Greedy breaks ties towards the lowest index.
int select_action(const std::vector<double>& probs, ActionMode mode, Rng& rng);

enum class KlDirection { policy_to_prior, prior_to_policy };
std::string to_string(KlDirection d);
KlDirection kl_direction_from_string(const std::string& s);

// KL(π‖prior) = Σ π_k (log π_k − log prior_k), or the reverse.
double kl_guided_loss(const std::vector<double>& pi, const std::vector<double>& prior,
                      KlDirection direction = KlDirection::policy_to_prior);
// Tape version from 1×K logits.
Var kl_guided_loss(Tape& tape, Var logits, const std::vector<double>& prior,
                   KlDirection direction = KlDirection::policy_to_prior);

}  // namespace vlg::policy
