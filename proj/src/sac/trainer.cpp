#include "vlg/sac/trainer.hpp"

#include <cstdio>
#include <fstream>

#include "vlg/common/errors.hpp"

namespace vlg::sac {

using nlohmann::json;

json EpisodeLog::to_json() const {
    json j{{"episode", episode},      {"stage", sim::to_string(stage)}, {"instruction", instruction},
           {"return", ret},           {"success", success},             {"motions", motions},
           {"updates", updates},      {"alpha", alpha},                 {"beta", beta}};
    if (entropy) j["entropy"] = *entropy;
    if (critic_loss) j["critic_loss"] = *critic_loss;
    if (actor_loss) j["actor_loss"] = *actor_loss;
    if (alpha_loss) j["alpha_loss"] = *alpha_loss;
    if (kl) j["kl"] = *kl;
    return j;
}

sim::WorldData load_world(const TrainConfig& config) {
    return sim::WorldData::load(config.data_dir.empty() ? sim::WorldData::default_dir() : std::filesystem::path(config.data_dir));
}

std::string checkpoint_name(int episode) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt_%06d.ckpt", episode);
    return buf;
}

namespace {

encoder::EncoderConfig encoder_config(const TrainConfig& c) {
    encoder::EncoderConfig e = c.encoder;
    e.width = c.model.attention.width;
    return e;
}

}  // namespace

Trainer::Trainer(TrainConfig config, sim::WorldData world)
    : config_(std::move(config)),
      world_(std::move(world)),
      encoder_(world_.library, world_.keywords, encoder_config(config_)),
      model_(std::make_unique<policy::FusionModel>(config_.model)),
      replay_(static_cast<std::size_t>(config_.sac.replay_capacity)),
      env_rng_(mix_seed(config_.seed, 11)),
      action_rng_(mix_seed(config_.seed, 12)),
      replay_rng_(mix_seed(config_.seed, 13)) {
    config_.validate();
    Rng init(mix_seed(config_.seed, 10));
    model_->init(init);
    learner_ = Learner(*model_, config_.sac);
}

sim::Scene Trainer::sample_training_scene(const StageConfig& stage, const sim::Instruction& ins) {
    sim::SceneOptions opts{.layout = stage.layout, .targets_at_bottom = stage.targets_at_bottom};
    for (int attempt = 0;; ++attempt) {
        try {
            return sim::sample_scene(env_rng_, stage.objects, world_.library, sim::Workspace{}, &ins, opts);
        } catch (const PlacementError&) {
            if (attempt >= 20) throw;
        }
    }
}

UpdateReport Trainer::update(double beta) {
    LossContext ctx{.encoder = &encoder_,
                    .beta = beta,
                    .direction = config_.guided.direction,
                    .temperature = config_.guided.temperature,
                    .mapping_threshold = config_.guided.mapping_threshold};
    auto batch = replay_.sample(static_cast<std::size_t>(config_.sac.batch_size), replay_rng_);
    return update_step(batch, *model_, learner_, config_.sac, ctx);
}

EpisodeLog Trainer::run_episode() {
    if (finished()) throw UsageError("train: curriculum already finished");
    const bool first_stage = episode_ < config_.stage1.episodes;
    const StageConfig& stage = first_stage ? config_.stage1 : config_.stage2;
    const double beta = config_.guided.beta(episode_);

    const sim::Instruction ins = sim::sample_instruction(env_rng_, world_.keywords);
    sim::Scene scene = sample_training_scene(stage, ins);
    const std::uint64_t episode_seed = env_rng_();
    scene.seed = episode_seed;
    sim::Episode ep(std::move(scene), ins,
                    {.stage = first_stage ? sim::Stage::one : sim::Stage::two,
                     .attempt_limit = stage.attempt_limit,
                     .proposals = config_.proposals},
                    episode_seed);

    EpisodeLog log;
    log.episode = episode_;
    log.stage = ep.stage();
    log.instruction = ins.text();
    log.beta = beta;
    double entropy_sum = 0.0, critic = 0.0, actor = 0.0, alpha_l = 0.0, kl = 0.0;
    int steps = 0;
    auto obs = std::make_shared<const sim::Observation>(ep.observation());
    while (!ep.done()) {
        if (!obs->actionable()) {  // nothing to act on: the episode fails
            ep.abort();
            break;
        }
        const auto enc = policy::encode_observation(*obs, encoder_);
        const auto pi = policy::policy_forward(*model_, enc);
        entropy_sum += sac::entropy(pi);
        ++steps;
        const int action = policy::select_action(pi, policy::ActionMode::sample, action_rng_);
        sim::StepResult r = ep.step(action);
        auto next = std::make_shared<const sim::Observation>(std::move(r.next));
        const bool done = r.done || !next->actionable();
        replay_.push({obs, action, r.reward, next, done});
        log.ret += r.reward;
        obs = next;

        if (replay_.size() >= static_cast<std::size_t>(config_.sac.batch_size))
            for (int u = 0; u < config_.sac.updates_per_step; ++u) {
                const UpdateReport rep = update(beta);
                ++log.updates;
                critic += rep.critic_loss, actor += rep.actor_loss, alpha_l += rep.alpha_loss;
                if (rep.kl) kl += *rep.kl;
            }
    }
    log.success = ep.success();
    log.motions = ep.attempts();
    log.alpha = learner_.alpha();
    if (steps > 0) log.entropy = entropy_sum / steps;
    if (log.updates > 0) {
        const double n = log.updates;
        log.critic_loss = critic / n, log.actor_loss = actor / n, log.alpha_loss = alpha_l / n;
        if (beta > 0.0) log.kl = kl / n;
    }
    ++episode_;
    return log;
}

std::vector<EpisodeLog> Trainer::run(const TrainOptions& options) {
    const bool write = !options.out_dir.empty();
    std::ofstream metrics;
    if (options.resume) restore(policy::read_checkpoint(*options.resume));
    if (write) {
        std::filesystem::create_directories(options.out_dir);
        std::ofstream run(options.out_dir / "run.json");
        run << json{{"config_hash", config_.hash()}, {"seed", config_.seed}, {"config", config_.to_json()}}.dump(2) << "\n";
        metrics.open(options.out_dir / "metrics.jsonl", options.resume ? std::ios::app : std::ios::trunc);
        if (!options.resume) policy::write_checkpoint(options.out_dir / checkpoint_name(episode_), checkpoint());
    }
    std::vector<EpisodeLog> logs;
    int last_saved = episode_;
    while (!finished()) {
        EpisodeLog log;
        try {
            log = run_episode();
        } catch (const NumericError&) {
            if (write) policy::write_checkpoint(options.out_dir / "abort.ckpt", checkpoint());
            throw;
        }
        if (write) {
            metrics << log.to_json().dump() << "\n";
            metrics.flush();
            if (config_.checkpoint_every > 0 && episode_ % config_.checkpoint_every == 0) {
                policy::write_checkpoint(options.out_dir / checkpoint_name(episode_), checkpoint());
                last_saved = episode_;
            }
        }
        if (options.on_episode) options.on_episode(log);
        logs.push_back(std::move(log));
    }
    if (write && last_saved != episode_) policy::write_checkpoint(options.out_dir / checkpoint_name(episode_), checkpoint());
    return logs;
}

policy::Checkpoint Trainer::checkpoint() {
    policy::Checkpoint c;
    c.header = {{"format", "vlg.checkpoint"},
                {"config", config_.to_json()},
                {"config_hash", config_.hash()},
                {"seed", config_.seed},
                {"episode", episode_},
                {"rng", {{"env", rng_state(env_rng_)}, {"action", rng_state(action_rng_)}, {"replay", rng_state(replay_rng_)}}}};
    c.add_params("model.", model_->all_params());
    c.add_params("", {&learner_.log_alpha});
    c.add_adam("model_opt.", learner_.model_opt);
    c.add_adam("alpha_opt.", learner_.alpha_opt);
    return c;
}

void Trainer::restore(const policy::Checkpoint& ckpt) {
    if (ckpt.header.value("config_hash", "") != config_.hash())
        throw ConfigError("resume: checkpoint config hash " + ckpt.header.value("config_hash", std::string("?")) +
                          " does not match this config (" + config_.hash() + ")");
    ckpt.restore_params("model.", model_->all_params());
    ckpt.restore_params("", {&learner_.log_alpha});
    ckpt.restore_adam("model_opt.", learner_.model_opt);
    ckpt.restore_adam("alpha_opt.", learner_.alpha_opt);
    set_rng_state(env_rng_, ckpt.header.at("rng").at("env").get<std::string>());
    set_rng_state(action_rng_, ckpt.header.at("rng").at("action").get<std::string>());
    set_rng_state(replay_rng_, ckpt.header.at("rng").at("replay").get<std::string>());
    episode_ = ckpt.header.at("episode").get<int>();
}

LoadedPolicy load_policy(const policy::Checkpoint& ckpt, const sim::WorldData& world) {
    if (ckpt.header.value("format", "") != "vlg.checkpoint") throw ConfigError("checkpoint: not a training checkpoint");
    LoadedPolicy out;
    out.config = TrainConfig::from_json(ckpt.header.at("config"));
    out.model = std::make_unique<policy::FusionModel>(out.config.model);
    ckpt.restore_params("model.", out.model->all_params());
    out.encoder = encoder::AlignedEncoder(world.library, world.keywords, encoder_config(out.config));
    out.episode = ckpt.header.at("episode").get<int>();
    return out;
}

}  // namespace vlg::sac
