#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "vlg/encoder/encoder.hpp"
#include "vlg/grasp/grasp.hpp"
#include "vlg/policy/model.hpp"
#include "vlg/sim/scene.hpp"

namespace vlg::sac {

struct SacConfig {
    double gamma = 0.99;
    double lr = 3e-4;
    double alpha_init = 0.2;
    bool auto_alpha = true;
    bool alpha_literal = false;
    double target_entropy_ratio = 0.5;  // H̄ = ratio·log K(s)
    int batch_size = 32;
    double tau = 0.005;
    int updates_per_step = 1;
    int replay_capacity = 20000;
};

struct GuidedConfig {
    bool enabled = true;
    double weight = 0.5;  // β at episode 0, decayed linearly to 0 at the end of the window
    int window = 800;     // episodes, counted from the start of Stage I
    policy::KlDirection direction = policy::KlDirection::policy_to_prior;
    double temperature = encoder::kGroundingTemperature;
    double mapping_threshold = grasp::kMappingThreshold;

    // Weight for a given global episode index; 0 once the window has passed.
    double beta(int episode) const;
};

struct StageConfig {
    int objects = 8;
    int episodes = 500;
    int attempt_limit = 5;
    sim::Layout layout = sim::Layout::scattered;
    bool targets_at_bottom = false;
};

// Everything a training run depends on. The run is a pure function of this
// document (seed included).
struct TrainConfig {
    std::uint64_t seed = 1;
    policy::ModelConfig model;
    encoder::EncoderConfig encoder;  // width is taken from the model
    grasp::ProposalConfig proposals;
    SacConfig sac;
    GuidedConfig guided;
    StageConfig stage1{.objects = 8, .episodes = 500, .attempt_limit = 5, .layout = sim::Layout::scattered};
    StageConfig stage2{.objects = 15, .episodes = 1500, .attempt_limit = 8, .layout = sim::Layout::cluttered};
    int checkpoint_every = 100;
    std::string data_dir;  // empty: the built-in data directory

    int total_episodes() const { return stage1.episodes + stage2.episodes; }
    void validate() const;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    static TrainConfig load(const std::filesystem::path& path);
    // FNV-1a of the canonical JSON dump, as 16 hex digits.
    std::string hash() const;
};

std::string to_string(sim::Layout l);
sim::Layout layout_from_string(const std::string& s);

}  // namespace vlg::sac
