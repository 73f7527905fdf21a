#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlg/encoder/encoder.hpp"
#include "vlg/policy/model.hpp"
#include "vlg/sim/episode.hpp"

namespace vlg::eval {

enum class Split { seen, unseen_objects, unseen_templates };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

// A fixed arrangement plus instruction. Generated cases keep their generator
// parameters so a suite file stays a list of seeds.
struct TestCase {
    std::string name;
    Split split = Split::seen;
    sim::Instruction instruction;
    sim::Scene scene;
    // generator record; absent for hand-written scenes
    std::optional<std::uint64_t> seed;
    int objects = 0;
    sim::SceneOptions options;
};

struct Suite {
    std::string name;
    std::vector<TestCase> cases;

    nlohmann::json to_json() const;
    static Suite from_json(const nlohmann::json& j, const sim::WorldData& world);
    static Suite load(const std::filesystem::path& path, const sim::WorldData& world);
    void save(const std::filesystem::path& path) const;
};

struct SuiteSpec {
    Split split = Split::seen;
    int cases = 10;
    int objects = 8;
    sim::Layout layout = sim::Layout::cluttered;
    bool targets_at_bottom = true;
};

// Cases from a seed. Unseen-object cases draw every object from the unseen
// split with a keyword that matches one of them; unseen-template cases phrase
// the instruction with a template outside the training set.
Suite make_suite(const std::string& name, const SuiteSpec& spec, std::uint64_t seed, const sim::WorldData& world);

// ---- policies -------------------------------------------------------------

struct PolicyInput {
    const sim::Observation& obs;
    const sim::Scene& scene;  // ground truth; only scripted policies look at it
};

struct Decision {
    int action = -1;  // −1: nothing to do, counts as a failed attempt
    std::vector<double> box_attention;
};

using PolicyFn = std::function<Decision(const PolicyInput&, Rng&)>;

// Greedy action of a trained model; records max attention per box.
PolicyFn model_policy(policy::FusionModel& model, const encoder::AlignedEncoder& encoder);
// Highest-similarity box, then a uniform grasp among those mapped to it
// (uniform over all grasps when none are).
PolicyFn grounding_policy(const encoder::AlignedEncoder& encoder, double temperature = encoder::kGroundingTemperature,
                          double threshold = grasp::kMappingThreshold);
PolicyFn random_policy();
// Scripted: best-quality grasp lying on a target, else best-quality grasp.
PolicyFn oracle_policy();
// Scripted: never acts.
PolicyFn fail_policy();

int baseline_grounding(const sim::Observation& obs, const encoder::AlignedEncoder& encoder, Rng& rng,
                       double temperature = encoder::kGroundingTemperature, double threshold = grasp::kMappingThreshold);
int baseline_random(const sim::Observation& obs, Rng& rng);

// ---- running --------------------------------------------------------------

struct StepTrace {
    int action = -1;
    int boxes = 0;
    int grasps = 0;
    std::optional<grasp::GraspPose> grasp;
    bool lifted = false;
    bool target = false;
    std::optional<int> grasped_uid;
    std::vector<double> box_attention;
};

struct RunResult {
    bool success = false;
    int motions = 0;  // attempts used; meaningful on success
    std::uint64_t seed = 0;
    std::vector<StepTrace> trace;
};

struct RunOptions {
    int max_attempts = 8;
    grasp::ProposalConfig proposals;
};

RunResult run_case(const PolicyFn& policy, const TestCase& test_case, Rng& rng, const RunOptions& options = {});

struct Aggregate {
    int runs = 0;
    int successes = 0;
    double success_rate = 0.0;            // percent
    std::optional<double> motion_number;  // mean motions over successful runs
};
Aggregate aggregate(const std::vector<RunResult>& runs);

struct CaseReport {
    std::string name;
    Split split = Split::seen;
    std::vector<RunResult> runs;
    Aggregate summary;
};

struct EvalReport {
    std::string policy;
    std::string suite;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<CaseReport> cases;
    Aggregate summary;

    nlohmann::json to_json() const;
    std::string to_csv() const;
    // Aggregates recomputed from the stored traces of a JSON report.
    static Aggregate recompute(const nlohmann::json& report);
};

struct EvalOptions {
    int runs_per_case = 15;
    std::uint64_t seed = 0;
    RunOptions run;
};

EvalReport evaluate(const PolicyFn& policy, const Suite& suite, const EvalOptions& options = {});

}  // namespace vlg::eval
