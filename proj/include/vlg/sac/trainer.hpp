#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "vlg/policy/checkpoint.hpp"
#include "vlg/sac/sac.hpp"

namespace vlg::sac {

struct EpisodeLog {
    int episode = 0;
    sim::Stage stage = sim::Stage::one;
    std::string instruction;
    double ret = 0.0;
    bool success = false;
    int motions = 0;
    int updates = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::optional<double> entropy;
    std::optional<double> critic_loss, actor_loss, alpha_loss, kl;

    // "kl" is present only for episodes that ran guided updates.
    nlohmann::json to_json() const;
};

struct TrainOptions {
    std::filesystem::path out_dir;  // empty: nothing written
    std::optional<std::filesystem::path> resume;
    std::function<void(const EpisodeLog&)> on_episode;
};

// Owns the model, optimiser state, replay and every random stream of a run.
class Trainer {
public:
    Trainer(TrainConfig config, sim::WorldData world);

    const TrainConfig& config() const { return config_; }
    const sim::WorldData& world() const { return world_; }
    const encoder::AlignedEncoder& encoder() const { return encoder_; }
    policy::FusionModel& model() { return *model_; }
    Learner& learner() { return learner_; }
    const ReplayBuffer& replay() const { return replay_; }
    int episode() const { return episode_; }
    bool finished() const { return episode_ >= config_.total_episodes(); }

    // Runs one episode of the current stage, updating after every step once
    // the replay holds a batch.
    EpisodeLog run_episode();
    // Runs to the end of the curriculum.
    std::vector<EpisodeLog> run(const TrainOptions& options = {});

    policy::Checkpoint checkpoint();
    void restore(const policy::Checkpoint& ckpt);

private:
    sim::Scene sample_training_scene(const StageConfig& stage, const sim::Instruction& ins);
    UpdateReport update(double beta);

    TrainConfig config_;
    sim::WorldData world_;
    encoder::AlignedEncoder encoder_;
    std::unique_ptr<policy::FusionModel> model_;
    Learner learner_;
    ReplayBuffer replay_;
    Rng env_rng_, action_rng_, replay_rng_;
    int episode_ = 0;
};

// Model and config recovered from a checkpoint, for evaluation.
struct LoadedPolicy {
    TrainConfig config;
    std::unique_ptr<policy::FusionModel> model;
    encoder::AlignedEncoder encoder;
    int episode = 0;
};
LoadedPolicy load_policy(const policy::Checkpoint& ckpt, const sim::WorldData& world);

sim::WorldData load_world(const TrainConfig& config);
std::string checkpoint_name(int episode);

}  // namespace vlg::sac
