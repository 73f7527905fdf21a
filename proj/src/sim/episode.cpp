#include "vlg/sim/episode.hpp"

#include <algorithm>
#include <limits>

#include "vlg/common/errors.hpp"

namespace vlg::sim {

std::string to_string(Stage s) { return s == Stage::one ? "I" : "II"; }

GraspOutcome execute_grasp(Scene& scene, const grasp::GraspPose& grasp, Rng& rng, double penalty) {
    GraspOutcome out;
    const double u = uniform01(rng);  // always drawn so the stream does not depend on the outcome path
    const int idx = topmost_at(scene, grasp.position[0], grasp.position[1]);
    if (idx < 0) return out;
    const ObjectInstance& obj = scene.objects[static_cast<std::size_t>(idx)];
    out.grasped_uid = obj.uid;
    const SceneRaster raster = rasterize(scene);
    const double p = std::clamp(grasp.quality, 0.0, 1.0) * (1.0 - penalty * raster.covered_fraction(idx));
    if (!(u < p)) return out;

    out.success = true;
    out.target = scene.is_target(obj.uid);
    if (!out.target) {
        double best = std::numeric_limits<double>::infinity();
        for (int t : scene.targets)
            if (const ObjectInstance* o = scene.find(t)) best = std::min(best, distance(obj.position(), o->position()));
        out.target_distance = std::min(best, scene.workspace.dist_max());
    }
    scene.remove(obj.uid);
    return out;
}

double compute_reward(const GraspOutcome& outcome, Stage stage, double dist_max) {
    if (outcome.success && outcome.target) return 2.0;
    if (!outcome.success || stage == Stage::one) return -1.0;
    return -std::min(outcome.target_distance, dist_max) / dist_max;
}

Episode::Episode(Scene scene, Instruction instruction, const EpisodeOptions& options, std::uint64_t seed)
    : scene_(std::move(scene)),
      instruction_(std::move(instruction)),
      options_(options),
      limit_(options.attempt_limit > 0 ? options.attempt_limit : default_attempt_limit(options.stage)),
      outcome_rng_(mix_seed(seed, 1)),
      proposal_rng_(mix_seed(seed, 2)),
      noise_seed_(mix_seed(seed, 3)) {
    observe();
}

void Episode::observe() {
    const SceneRaster raster = rasterize(scene_);
    obs_.boxes = detect_boxes(scene_, raster);
    obs_.grasps = grasp::propose_grasps(scene_, raster, options_.proposals, proposal_rng_);
    obs_.instruction = instruction_;
    obs_.noise_seed = noise_seed_;
}

StepResult Episode::step(int action) {
    if (done_) throw UsageError("step: episode is already finished");
    if (action < 0 || action >= obs_.grasp_count())
        throw UsageError("step: action " + std::to_string(action) + " out of range for " +
                         std::to_string(obs_.grasp_count()) + " grasps");
    return step(obs_.grasps[static_cast<std::size_t>(action)]);
}

StepResult Episode::step(const grasp::GraspPose& grasp) {
    if (done_) throw UsageError("step: episode is already finished");
    return finish_step(execute_grasp(scene_, grasp, outcome_rng_, options_.clutter_penalty));
}

StepResult Episode::fail_attempt() {
    if (done_) throw UsageError("step: episode is already finished");
    return finish_step(GraspOutcome{});
}

void Episode::abort() { done_ = true; }

StepResult Episode::finish_step(const GraspOutcome& outcome) {
    ++attempts_;
    StepResult r;
    r.outcome = outcome;
    r.reward = compute_reward(outcome, options_.stage, scene_.workspace.dist_max());
    success_ = outcome.success && outcome.target;
    done_ = success_ || attempts_ >= limit_;
    if (!done_) observe();
    r.next = obs_;
    r.done = done_;
    r.success = success_;
    return r;
}

}  // namespace vlg::sim
