#include "vlg/sac/gradcheck.hpp"

#include "vlg/common/errors.hpp"
#include "vlg/sac/sac.hpp"
#include "vlg/sim/scene.hpp"

namespace vlg::sac {

namespace {

sim::Observation micro_observation(const sim::WorldData& world, const MicroCheckOptions& o) {
    Rng rng(mix_seed(o.seed, 1));
    for (int attempt = 0; attempt < 200; ++attempt) {
        const auto ins = sim::sample_instruction(rng, world.keywords);
        sim::Scene scene;
        try {
            scene = sim::sample_scene(rng, o.boxes + 3, world.library, sim::Workspace{}, &ins);
        } catch (const PlacementError&) {
            continue;
        }
        sim::Episode ep(std::move(scene), ins, {.stage = sim::Stage::two}, rng());
        sim::Observation obs = ep.observation();
        if (obs.box_count() < o.boxes || obs.grasp_count() < o.grasps) continue;
        obs.boxes.resize(static_cast<std::size_t>(o.boxes));
        obs.grasps.resize(static_cast<std::size_t>(o.grasps));
        return obs;
    }
    throw ConfigError("gradcheck: no scene with enough boxes and grasps");
}

}  // namespace

std::vector<MicroCheck> micro_grad_check(const sim::WorldData& world, const MicroCheckOptions& o) {
    if (o.boxes < 1 || o.grasps < 2) throw ConfigError("gradcheck: need at least one box and two grasps");
    const encoder::AlignedEncoder enc(world.library, world.keywords,
                                      encoder::EncoderConfig{.width = o.width, .sigma_align = 0.3});
    auto obs = std::make_shared<const sim::Observation>(micro_observation(world, o));
    const Transition t{obs, 1, 2.0, obs, true};

    std::vector<MicroCheck> out;
    for (policy::FusionMode mode :
         {policy::FusionMode::cross_attention, policy::FusionMode::position_as_key, policy::FusionMode::film}) {
        policy::ModelConfig mc;
        mc.mode = mode;
        mc.attention.width = o.width;
        mc.attention.heads = o.heads;
        mc.bands = 2;
        policy::FusionModel model(mc);
        Rng init(mix_seed(o.seed, 2));
        model.init(init);
        nn::Parameter log_alpha("log_alpha", 1, 1);
        log_alpha.value(0, 0) = std::log(0.2);

        auto check = [&](const std::string& name, bool literal, auto pick, const nn::ParameterList& params) {
            LossContext ctx{.encoder = &enc, .alpha = 0.2, .alpha_literal = literal, .beta = 1.0};
            auto loss = [&](nn::Tape& tape) { return pick(tape, transition_losses(tape, model, log_alpha, t, ctx)); };
            MicroCheck c{mode, name, nn::grad_check(loss, params, 1e-5, o.floor, o.fault)};
            c.passed = c.result.max_rel_error < o.tolerance;
            out.push_back(std::move(c));
        };
        check("critic", false, [](nn::Tape&, const LossTerms& l) { return l.critic; }, model.online_params());
        check("actor", false, [](nn::Tape&, const LossTerms& l) { return l.actor; }, model.policy_params());
        check("alpha", false, [](nn::Tape&, const LossTerms& l) { return l.alpha; }, {&log_alpha});
        check("alpha_literal", true, [](nn::Tape&, const LossTerms& l) { return l.alpha; }, {&log_alpha});
        check("kl", false, [](nn::Tape&, const LossTerms& l) { return *l.kl; }, model.online_params());
    }
    return out;
}

}  // namespace vlg::sac
