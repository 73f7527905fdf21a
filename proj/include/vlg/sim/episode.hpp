#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vlg/common/random.hpp"
#include "vlg/grasp/grasp.hpp"
#include "vlg/sim/detection.hpp"
#include "vlg/sim/instruction.hpp"
#include "vlg/sim/scene.hpp"

namespace vlg::sim {

enum class Stage { one = 1, two = 2 };

inline int default_attempt_limit(Stage s) { return s == Stage::one ? 5 : 8; }
std::string to_string(Stage s);

inline constexpr double kClutterPenalty = 0.8;

struct GraspOutcome {
    bool success = false;
    std::optional<int> grasped_uid;  // object under the gripper, whether or not it was lifted
    bool target = false;             // a target was lifted
    double target_distance = 0.0;    // from the lifted object to the nearest target, clamped to dist_max
};

// Success with probability quality·(1 − λ·covered), where covered is the share
// of the grasped object's footprint under higher objects. The grasped object is
// the topmost one under the grasp point; a lifted object leaves the scene.
GraspOutcome execute_grasp(Scene& scene, const grasp::GraspPose& grasp, Rng& rng, double penalty = kClutterPenalty);

// Stage I: +2 target, −1 otherwise. Stage II: +2 target, −dist/dist_max for a
// lifted non-target, −1 for a failed grasp.
double compute_reward(const GraspOutcome& outcome, Stage stage, double dist_max);

// Everything the policy sees.
struct Observation {
    std::vector<ObjectBox> boxes;
    std::vector<grasp::GraspPose> grasps;
    Instruction instruction;
    std::uint64_t noise_seed = 0;  // per-episode; encoder noise for a box uses mix_seed(noise_seed, dominant_uid)

    int box_count() const { return static_cast<int>(boxes.size()); }
    int grasp_count() const { return static_cast<int>(grasps.size()); }
    bool actionable() const { return !boxes.empty() && !grasps.empty(); }
};

struct StepResult {
    double reward = 0.0;
    Observation next;
    bool done = false;
    bool success = false;
    GraspOutcome outcome;
};

struct EpisodeOptions {
    Stage stage = Stage::one;
    int attempt_limit = 0;  // 0 means the stage default
    grasp::ProposalConfig proposals;
    double clutter_penalty = kClutterPenalty;
};

class Episode {
public:
    Episode(Scene scene, Instruction instruction, const EpisodeOptions& options, std::uint64_t seed);

    const Observation& observation() const { return obs_; }
    const Scene& scene() const { return scene_; }
    Stage stage() const { return options_.stage; }
    int attempts() const { return attempts_; }
    int attempt_limit() const { return limit_; }
    bool done() const { return done_; }
    bool success() const { return success_; }

    StepResult step(int action);
    StepResult step(const grasp::GraspPose& grasp);
    // Spends one attempt without acting (nothing to grasp); reward −1.
    StepResult fail_attempt();
    // Ends the episode as a failure; attempt counter unchanged.
    void abort();

private:
    void observe();
    StepResult finish_step(const GraspOutcome& outcome);

    Scene scene_;
    Instruction instruction_;
    EpisodeOptions options_;
    int limit_ = 0;
    Rng outcome_rng_;
    Rng proposal_rng_;
    std::uint64_t noise_seed_ = 0;
    Observation obs_;
    int attempts_ = 0;
    bool done_ = false;
    bool success_ = false;
};

}  // namespace vlg::sim
