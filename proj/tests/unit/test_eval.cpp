#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vlg/common/errors.hpp"
#include "vlg/eval/eval.hpp"
#include "vlg/grasp/grasp.hpp"
#include "vlg/sim/io.hpp"

using namespace vlg;
using namespace vlg::eval;

namespace {

const sim::WorldData& world() {
    static const sim::WorldData w = sim::WorldData::load(sim::WorldData::default_dir());
    return w;
}

const encoder::AlignedEncoder& enc64(double sigma = 0.0) {
    static const encoder::AlignedEncoder e0(world().library, world().keywords, encoder::EncoderConfig{.width = 64});
    static const encoder::AlignedEncoder e3(world().library, world().keywords,
                                            encoder::EncoderConfig{.width = 64, .sigma_align = 0.3});
    return sigma == 0.0 ? e0 : e3;
}

// Scattered cases whose targets are all easy to hold (quality 1, nothing on top).
std::vector<TestCase> easy_cases(int count) {
    const auto suite = make_suite("easy", {.cases = 60, .objects = 4, .layout = sim::Layout::scattered,
                                           .targets_at_bottom = false},
                                  7, world());
    std::vector<TestCase> out;
    for (const auto& c : suite.cases) {
        bool easy = true;
        for (int uid : c.scene.targets) easy = easy && grasp::width_quality(c.scene.find(uid)->spec.grasp_extent()) == 1.0;
        if (easy) out.push_back(c);
        if (static_cast<int>(out.size()) == count) break;
    }
    REQUIRE(static_cast<int>(out.size()) == count);
    return out;
}

RunResult run_with(int motions, bool success) {
    RunResult r;
    r.success = success;
    r.motions = motions;
    return r;
}

sim::Observation first_observation(const TestCase& c, std::uint64_t seed,
                                   const grasp::ProposalConfig& proposals = grasp::ProposalConfig::noiseless()) {
    sim::Episode ep(c.scene, c.instruction, {.stage = sim::Stage::two, .proposals = proposals}, seed);
    return ep.observation();
}

}  // namespace

TEST_SUITE("suites") {
    TEST_CASE("generated suites round trip through their seeds") {
        const auto s = make_suite("seen", {.cases = 4}, 11, world());
        REQUIRE(s.cases.size() == 4);
        const auto back = Suite::from_json(s.to_json(), world());
        REQUIRE(back.cases.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(sim::scene_to_json(back.cases[i].scene) == sim::scene_to_json(s.cases[i].scene));
            CHECK(back.cases[i].instruction == s.cases[i].instruction);
            CHECK_FALSE(s.cases[i].scene.targets.empty());
            CHECK(s.cases[i].scene.objects.size() == 8);
        }
        // the file stores seeds, not poses
        CHECK_FALSE(s.to_json()["cases"][0].contains("scene"));
    }

    TEST_CASE("hand-written scenes are stored verbatim") {
        auto s = make_suite("hand", {.cases = 1, .objects = 3}, 3, world());
        s.cases[0].seed.reset();
        const auto j = s.to_json();
        CHECK(j["cases"][0].contains("scene"));
        const auto back = Suite::from_json(j, world());
        CHECK(sim::scene_to_json(back.cases[0].scene) == sim::scene_to_json(s.cases[0].scene));
    }

    TEST_CASE("unseen-object cases use only held-out objects") {
        const auto s = make_suite("uo", {.split = Split::unseen_objects, .cases = 5}, 5, world());
        for (const auto& c : s.cases)
            for (const auto& o : c.scene.objects) CHECK(o.spec.unseen);
    }

    TEST_CASE("unseen-template cases use templates outside the training set") {
        const auto s = make_suite("ut", {.split = Split::unseen_templates, .cases = 5}, 5, world());
        const int train = static_cast<int>(world().keywords.train_templates.size());
        for (const auto& c : s.cases) {
            CHECK(c.instruction.template_id >= train);
            for (const auto& o : c.scene.objects) CHECK_FALSE(o.spec.unseen);
        }
    }

    TEST_CASE("malformed suites are rejected") {
        auto j = make_suite("x", {.cases = 1}, 1, world()).to_json();
        j["cases"][0]["split"] = "mystery";
        CHECK_THROWS_AS(Suite::from_json(j, world()), ConfigError);
        j = make_suite("x", {.cases = 1}, 1, world()).to_json();
        j["cases"][0]["instruction"]["keyword"] = "zebra";
        CHECK_THROWS(Suite::from_json(j, world()));
        CHECK_THROWS_AS(Suite::from_json(nlohmann::json{{"format", "vlg.suite"}, {"version", 1}, {"cases", nlohmann::json::array()}},
                                         world()),
                        ConfigError);
    }
}

TEST_SUITE("runs") {
    TEST_CASE("scripted policy that grasps the target first") {
        for (const auto& c : easy_cases(5)) {
            Rng rng(1);
            const auto r = run_case(oracle_policy(), c, rng, {.proposals = grasp::ProposalConfig::noiseless()});
            CHECK(r.success);
            CHECK(r.motions == 1);
            REQUIRE(r.trace.size() == 1);
            CHECK(r.trace[0].target);
            CHECK(r.trace[0].lifted);
        }
    }

    TEST_CASE("a policy that never acts uses every attempt") {
        const auto c = make_suite("f", {.cases = 1}, 2, world()).cases[0];
        Rng rng(2);
        const auto r = run_case(fail_policy(), c, rng);
        CHECK_FALSE(r.success);
        CHECK(r.trace.size() == 8);
        for (const auto& s : r.trace) CHECK(s.action == -1);
    }

    TEST_CASE("same seed, same trace") {
        const auto c = make_suite("d", {.cases = 1}, 3, world()).cases[0];
        Rng a(5), b(5);
        const auto ra = run_case(random_policy(), c, a), rb = run_case(random_policy(), c, b);
        CHECK(ra.seed == rb.seed);
        REQUIRE(ra.trace.size() == rb.trace.size());
        for (std::size_t i = 0; i < ra.trace.size(); ++i) {
            CHECK(ra.trace[i].action == rb.trace[i].action);
            CHECK(ra.trace[i].grasp == rb.trace[i].grasp);
        }
    }

    TEST_CASE("out-of-range actions are a usage error") {
        const auto c = make_suite("o", {.cases = 1}, 4, world()).cases[0];
        Rng rng(1);
        PolicyFn bad = [](const PolicyInput& in, Rng&) { return Decision{in.obs.grasp_count(), {}}; };
        CHECK_THROWS_AS(run_case(bad, c, rng), UsageError);
    }

    TEST_CASE("model policy records one attention weight per box") {
        policy::ModelConfig mc;
        mc.attention.width = 64;
        mc.attention.heads = 4;
        policy::FusionModel model(mc);
        Rng init(1);
        model.init(init);
        const auto c = make_suite("m", {.cases = 1}, 6, world()).cases[0];
        Rng rng(1);
        const auto r = run_case(model_policy(model, enc64()), c, rng);
        for (const auto& s : r.trace) {
            CHECK(static_cast<int>(s.box_attention.size()) == s.boxes);
            for (double w : s.box_attention) CHECK((w >= 0.0 && w <= 1.0));
        }
    }
}

TEST_SUITE("aggregates") {
    TEST_CASE("all runs succeed in one motion") {
        std::vector<RunResult> runs(15, run_with(1, true));
        const auto a = aggregate(runs);
        CHECK(a.success_rate == 100.0);
        REQUIRE(a.motion_number);
        CHECK(*a.motion_number == 1.0);
    }

    TEST_CASE("mixed log") {
        std::vector<RunResult> runs;
        for (int m : {1, 2, 2, 3, 3, 4, 4, 5, 6}) runs.push_back(run_with(m, true));
        for (int i = 0; i < 6; ++i) runs.push_back(run_with(8, false));
        const auto a = aggregate(runs);
        CHECK(a.runs == 15);
        CHECK(a.successes == 9);
        CHECK(a.success_rate == doctest::Approx(60.0));
        REQUIRE(a.motion_number);
        CHECK(*a.motion_number == doctest::Approx(30.0 / 9.0));
    }

    TEST_CASE("no successes leaves the motion number absent") {
        const auto a = aggregate(std::vector<RunResult>(4, run_with(8, false)));
        CHECK(a.success_rate == 0.0);
        CHECK_FALSE(a.motion_number.has_value());
    }

    TEST_CASE("reports recompute exactly from their traces and repeat exactly") {
        const auto suite = make_suite("r", {.cases = 3, .objects = 5}, 8, world());
        const EvalOptions opts{.runs_per_case = 4, .seed = 21};
        const auto rep = evaluate(grounding_policy(enc64(0.3)), suite, opts);
        const auto j = rep.to_json();
        const auto again = EvalReport::recompute(j);
        CHECK(again.runs == rep.summary.runs);
        CHECK(again.successes == rep.summary.successes);
        CHECK(again.success_rate == rep.summary.success_rate);
        CHECK(again.motion_number == rep.summary.motion_number);
        CHECK(evaluate(grounding_policy(enc64(0.3)), suite, opts).to_json() == j);
        CHECK(rep.summary.runs == 12);

        const auto csv = rep.to_csv();
        CHECK(csv.rfind("case,split,runs,successes,success_rate,motion_number\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    }

    TEST_CASE("evaluation needs cases and runs") {
        CHECK_THROWS_AS(evaluate(random_policy(), Suite{}), ConfigError);
        const auto suite = make_suite("r", {.cases = 1}, 8, world());
        CHECK_THROWS_AS(evaluate(random_policy(), suite, {.runs_per_case = 0}), ConfigError);
    }
}

TEST_SUITE("baselines") {
    TEST_CASE("random baseline") {
        sim::Observation obs;
        obs.grasps.resize(1);
        Rng rng(1);
        CHECK(baseline_random(obs, rng) == 0);
        obs.grasps.resize(5);
        std::vector<int> counts(5, 0);
        for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(baseline_random(obs, rng))];
        for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.2) <= 0.02);
        Rng a(3), b(3);
        for (int i = 0; i < 20; ++i) CHECK(baseline_random(obs, a) == baseline_random(obs, b));
        obs.grasps.clear();
        CHECK(baseline_random(obs, rng) == -1);
    }

    TEST_CASE("single box with a single mapped grasp") {
        const auto c = easy_cases(1)[0];
        auto obs = first_observation(c, 1);
        REQUIRE_FALSE(obs.boxes.empty());
        obs.boxes.resize(1);
        const auto mapping = grasp::box_grasp_mapping(obs.boxes, obs.grasps);
        const auto mapped = mapping.grasps_of(0);
        REQUIRE_FALSE(mapped.empty());
        obs.grasps = {obs.grasps[static_cast<std::size_t>(mapped[0])]};
        Rng rng(1);
        for (int i = 0; i < 20; ++i) CHECK(baseline_grounding(obs, enc64(), rng) == 0);
    }

    TEST_CASE("no grasp on the chosen box falls back to a uniform choice") {
        const auto c = easy_cases(1)[0];
        auto obs = first_observation(c, 2);
        REQUIRE(obs.grasp_count() >= 1);
        obs.grasps.resize(5, obs.grasps[0]);
        // move every grasp off the table so no box claims any of them
        for (auto& g : obs.grasps) g.position[0] += 1.0;
        const auto mapping = grasp::box_grasp_mapping(obs.boxes, obs.grasps);
        for (int b = 0; b < obs.box_count(); ++b) REQUIRE(mapping.grasps_of(b).empty());
        Rng rng(4);
        std::vector<double> counts(5, 0.0);
        const int n = 10000;
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(baseline_grounding(obs, enc64(), rng))];
        double chi2 = 0.0;
        for (double x : counts) chi2 += (x - n / 5.0) * (x - n / 5.0) / (n / 5.0);
        // 4 degrees of freedom, p = 0.001
        CHECK(chi2 < 18.467);
    }

    TEST_CASE("noise-free grounding picks a grasp on a target in scattered scenes") {
        const auto suite = make_suite("g", {.cases = 40, .objects = 6, .layout = sim::Layout::scattered,
                                            .targets_at_bottom = false},
                                      9, world());
        Rng rng(3);
        for (const auto& c : suite.cases) {
            const auto obs = first_observation(c, 3);
            const int a = baseline_grounding(obs, enc64(), rng);
            REQUIRE(a >= 0);
            const auto& g = obs.grasps[static_cast<std::size_t>(a)];
            const int idx = sim::topmost_at(c.scene, g.position[0], g.position[1]);
            REQUIRE(idx >= 0);
            CHECK(c.scene.is_target(c.scene.objects[static_cast<std::size_t>(idx)].uid));
        }
    }

    TEST_CASE("nothing to act on") {
        sim::Observation obs;
        Rng rng(1);
        CHECK(baseline_grounding(obs, enc64(), rng) == -1);
    }
}
