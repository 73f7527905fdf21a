#include "vlg/eval/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vlg/common/errors.hpp"
#include "vlg/grasp/grasp.hpp"
#include "vlg/sim/io.hpp"

namespace vlg::eval {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::seen: return "seen";
        case Split::unseen_objects: return "unseen_objects";
        case Split::unseen_templates: return "unseen_templates";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "seen") return Split::seen;
    if (s == "unseen_objects") return Split::unseen_objects;
    if (s == "unseen_templates") return Split::unseen_templates;
    throw ConfigError("unknown split '" + s + "' (seen, unseen_objects, unseen_templates)");
}

namespace {

std::string layout_name(sim::Layout l) { return l == sim::Layout::scattered ? "scattered" : "cluttered"; }

sim::Layout layout_of(const std::string& s) {
    if (s == "scattered") return sim::Layout::scattered;
    if (s == "cluttered") return sim::Layout::cluttered;
    throw ConfigError("unknown layout '" + s + "'");
}

bool keyword_splits(const std::vector<const sim::ObjectSpec*>& pool, const std::string& keyword) {
    bool match = false, other = false;
    for (const auto* s : pool) (s->matches(keyword) ? match : other) = true;
    return match && other;
}

TestCase generate_case(const std::string& name, Split split, std::uint64_t seed, int objects,
                       const sim::SceneOptions& base, const sim::WorldData& world) {
    Rng rng(seed);
    TestCase c;
    c.name = name;
    c.split = split;
    c.seed = seed;
    c.objects = objects;
    c.options = base;
    c.options.unseen_objects = split == Split::unseen_objects;
    const auto pool = world.library.split(c.options.unseen_objects);
    for (int attempt = 0;; ++attempt) {
        if (attempt > 200) throw ConfigError("make-suite: no usable instruction for case " + name);
        sim::Instruction ins = sim::sample_instruction(rng, world.keywords);
        if (!keyword_splits(pool, ins.keyword)) continue;
        if (split == Split::unseen_templates) {
            const auto& unseen = world.keywords.unseen_templates;
            if (unseen.empty()) throw ConfigError("make-suite: keyword table has no unseen templates");
            const int id = static_cast<int>(world.keywords.train_templates.size() + uniform_index(rng, unseen.size()));
            ins = sim::make_instruction(world.keywords, id, ins.keyword);
        }
        try {
            c.scene = sim::sample_scene(rng, objects, world.library, sim::Workspace{}, &ins, c.options);
        } catch (const PlacementError&) {
            continue;
        }
        c.scene.seed = seed;
        c.instruction = ins;
        return c;
    }
}

json case_to_json(const TestCase& c) {
    json j{{"name", c.name}, {"split", to_string(c.split)}, {"instruction", sim::instruction_to_json(c.instruction)}};
    if (c.seed) {
        j["generator"] = {{"seed", *c.seed},
                          {"objects", c.objects},
                          {"layout", layout_name(c.options.layout)},
                          {"targets_at_bottom", c.options.targets_at_bottom}};
    } else {
        j["scene"] = sim::scene_to_json(c.scene);
    }
    return j;
}

}  // namespace

json Suite::to_json() const {
    json cases_j = json::array();
    for (const auto& c : cases) cases_j.push_back(case_to_json(c));
    return {{"format", "vlg.suite"}, {"version", 1}, {"name", name}, {"cases", cases_j}};
}

Suite Suite::from_json(const json& j, const sim::WorldData& world) {
    if (j.value("format", "") != "vlg.suite") throw ConfigError("suite: missing format tag 'vlg.suite'");
    if (j.value("version", 0) != 1) throw ConfigError("suite: unsupported version");
    Suite s;
    s.name = j.value("name", "");
    for (const auto& cj : j.at("cases")) {
        const std::string name = cj.at("name").get<std::string>();
        const Split split = split_from_string(cj.at("split").get<std::string>());
        TestCase c;
        if (cj.contains("generator")) {
            const auto& g = cj["generator"];
            sim::SceneOptions opts{.layout = layout_of(g.value("layout", "cluttered")),
                                   .targets_at_bottom = g.value("targets_at_bottom", false)};
            c = generate_case(name, split, g.at("seed").get<std::uint64_t>(), g.at("objects").get<int>(), opts, world);
            if (cj.contains("instruction") && sim::instruction_from_json(cj["instruction"]) != c.instruction)
                throw ConfigError("suite: case '" + name + "' no longer regenerates its stored instruction");
        } else {
            c.name = name;
            c.split = split;
            c.instruction = sim::instruction_from_json(cj.at("instruction"));
            c.scene = sim::scene_from_json(cj.at("scene"));
            if (c.scene.targets.empty()) throw ConfigError("suite: case '" + name + "' has no target");
        }
        s.cases.push_back(std::move(c));
    }
    if (s.cases.empty()) throw ConfigError("suite: no cases");
    return s;
}

Suite Suite::load(const std::filesystem::path& path, const sim::WorldData& world) {
    std::ifstream in(path);
    if (!in) throw ConfigError("suite: cannot open " + path.string());
    try {
        return from_json(json::parse(in), world);
    } catch (const json::exception& e) {
        throw ConfigError("suite: " + path.string() + ": " + e.what());
    }
}

void Suite::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("suite: cannot write " + path.string());
    out << to_json().dump(2) << "\n";
}

Suite make_suite(const std::string& name, const SuiteSpec& spec, std::uint64_t seed, const sim::WorldData& world) {
    if (spec.cases < 1) throw ConfigError("make-suite: need at least one case");
    Suite s;
    s.name = name;
    sim::SceneOptions opts{.layout = spec.layout, .targets_at_bottom = spec.targets_at_bottom};
    for (int i = 0; i < spec.cases; ++i)
        s.cases.push_back(generate_case(name + "-" + std::to_string(i), spec.split,
                                        mix_seed(seed, static_cast<std::uint64_t>(i)), spec.objects, opts, world));
    return s;
}

// ---- policies ---------------------------------------------------------------

int baseline_random(const sim::Observation& obs, Rng& rng) {
    if (obs.grasps.empty()) return -1;
    return static_cast<int>(uniform_index(rng, obs.grasps.size()));
}

int baseline_grounding(const sim::Observation& obs, const encoder::AlignedEncoder& encoder, Rng& rng,
                       double temperature, double threshold) {
    if (obs.grasps.empty() || obs.boxes.empty()) return -1;
    const auto probs = encoder::ground_probabilities(encoder.encode_boxes(obs.boxes, obs.noise_seed),
                                                     encoder.encode_text(obs.instruction, true), temperature);
    const int best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    const auto mapped = grasp::box_grasp_mapping(obs.boxes, obs.grasps, threshold).grasps_of(best);
    if (mapped.empty()) return static_cast<int>(uniform_index(rng, obs.grasps.size()));
    return mapped[uniform_index(rng, mapped.size())];
}

PolicyFn model_policy(policy::FusionModel& model, const encoder::AlignedEncoder& encoder) {
    return [&model, &encoder](const PolicyInput& in, Rng& rng) {
        Decision d;
        if (!in.obs.actionable()) return d;
        const auto enc = policy::encode_observation(in.obs, encoder, true);
        nn::Tape tape(false);
        nn::AttentionWeights w;
        nn::Var s = policy::build_state(tape, model, enc, &w);
        const nn::Tensor2& logits = tape.value(tape.softmax_rows(policy::policy_logits(tape, model, s)));
        const std::vector<double> pi(logits.data(), logits.data() + logits.size());
        d.action = policy::select_action(pi, policy::ActionMode::greedy, rng);
        d.box_attention = w.max_per_key();
        return d;
    };
}

PolicyFn grounding_policy(const encoder::AlignedEncoder& encoder, double temperature, double threshold) {
    return [&encoder, temperature, threshold](const PolicyInput& in, Rng& rng) {
        return Decision{baseline_grounding(in.obs, encoder, rng, temperature, threshold), {}};
    };
}

PolicyFn random_policy() {
    return [](const PolicyInput& in, Rng& rng) { return Decision{baseline_random(in.obs, rng), {}}; };
}

PolicyFn oracle_policy() {
    return [](const PolicyInput& in, Rng&) {
        Decision d;
        double best_target = -1.0, best_any = -1.0;
        int target_action = -1, any_action = -1;
        for (int k = 0; k < in.obs.grasp_count(); ++k) {
            const auto& g = in.obs.grasps[static_cast<std::size_t>(k)];
            if (g.quality > best_any) best_any = g.quality, any_action = k;
            const int idx = sim::topmost_at(in.scene, g.position[0], g.position[1]);
            if (idx >= 0 && in.scene.is_target(in.scene.objects[static_cast<std::size_t>(idx)].uid) && g.quality > best_target)
                best_target = g.quality, target_action = k;
        }
        d.action = target_action >= 0 ? target_action : any_action;
        return d;
    };
}

PolicyFn fail_policy() {
    return [](const PolicyInput&, Rng&) { return Decision{}; };
}

// ---- running ----------------------------------------------------------------

RunResult run_case(const PolicyFn& policy, const TestCase& test_case, Rng& rng, const RunOptions& options) {
    if (options.max_attempts < 1) throw ConfigError("run_case: max_attempts must be at least 1");
    RunResult out;
    out.seed = rng();
    sim::Episode ep(test_case.scene, test_case.instruction,
                    {.stage = sim::Stage::two, .attempt_limit = options.max_attempts, .proposals = options.proposals},
                    out.seed);
    while (!ep.done()) {
        const sim::Observation& obs = ep.observation();
        StepTrace st;
        st.boxes = obs.box_count();
        st.grasps = obs.grasp_count();
        Decision d = policy(PolicyInput{obs, ep.scene()}, rng);
        st.box_attention = std::move(d.box_attention);
        if (d.action >= obs.grasp_count()) throw UsageError("run_case: policy chose action " + std::to_string(d.action) +
                                                            " of " + std::to_string(obs.grasp_count()));
        sim::StepResult r;
        if (d.action < 0) {
            r = ep.fail_attempt();
        } else {
            st.grasp = obs.grasps[static_cast<std::size_t>(d.action)];
            r = ep.step(d.action);
        }
        st.action = d.action;
        st.lifted = r.outcome.success;
        st.target = r.outcome.target;
        st.grasped_uid = r.outcome.grasped_uid;
        out.trace.push_back(std::move(st));
    }
    out.success = ep.success();
    out.motions = ep.attempts();
    return out;
}

Aggregate aggregate(const std::vector<RunResult>& runs) {
    Aggregate a;
    a.runs = static_cast<int>(runs.size());
    double motions = 0.0;
    for (const auto& r : runs)
        if (r.success) ++a.successes, motions += r.motions;
    if (a.runs > 0) a.success_rate = 100.0 * a.successes / a.runs;
    if (a.successes > 0) a.motion_number = motions / a.successes;
    return a;
}

EvalReport evaluate(const PolicyFn& policy, const Suite& suite, const EvalOptions& options) {
    if (suite.cases.empty()) throw ConfigError("evaluate: empty suite");
    if (options.runs_per_case < 1) throw ConfigError("evaluate: runs_per_case must be at least 1");
    EvalReport rep;
    rep.suite = suite.name;
    rep.seed = options.seed;
    std::vector<RunResult> all;
    for (std::size_t c = 0; c < suite.cases.size(); ++c) {
        CaseReport cr;
        cr.name = suite.cases[c].name;
        cr.split = suite.cases[c].split;
        for (int r = 0; r < options.runs_per_case; ++r) {
            Rng rng(mix_seed(mix_seed(options.seed, c), static_cast<std::uint64_t>(r)));
            cr.runs.push_back(run_case(policy, suite.cases[c], rng, options.run));
        }
        cr.summary = aggregate(cr.runs);
        all.insert(all.end(), cr.runs.begin(), cr.runs.end());
        rep.cases.push_back(std::move(cr));
    }
    rep.summary = aggregate(all);
    return rep;
}

namespace {

json aggregate_json(const Aggregate& a) {
    json j{{"runs", a.runs}, {"successes", a.successes}, {"success_rate", a.success_rate}};
    j["motion_number"] = a.motion_number ? json(*a.motion_number) : json(nullptr);
    return j;
}

}  // namespace

json EvalReport::to_json() const {
    json cases_j = json::array();
    for (const auto& c : cases) {
        json runs = json::array();
        for (const auto& r : c.runs) {
            json trace = json::array();
            for (const auto& s : r.trace) {
                json sj{{"action", s.action}, {"boxes", s.boxes}, {"grasps", s.grasps}, {"lifted", s.lifted}, {"target", s.target}};
                if (s.grasp) sj["grasp"] = sim::grasp_to_json(*s.grasp);
                if (s.grasped_uid) sj["grasped_uid"] = *s.grasped_uid;
                if (!s.box_attention.empty()) sj["box_attention"] = s.box_attention;
                trace.push_back(sj);
            }
            runs.push_back({{"seed", r.seed}, {"success", r.success}, {"motions", r.motions}, {"trace", trace}});
        }
        cases_j.push_back({{"name", c.name}, {"split", to_string(c.split)}, {"summary", aggregate_json(c.summary)}, {"runs", runs}});
    }
    return {{"format", "vlg.eval_report"},
            {"version", 1},
            {"policy", policy},
            {"suite", suite},
            {"config_hash", config_hash},
            {"seed", seed},
            {"summary", aggregate_json(summary)},
            {"cases", cases_j}};
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "case,split,runs,successes,success_rate,motion_number\n";
    auto row = [&](const std::string& name, const std::string& split, const Aggregate& a) {
        out << name << "," << split << "," << a.runs << "," << a.successes << "," << a.success_rate << ",";
        if (a.motion_number) out << *a.motion_number;
        out << "\n";
    };
    for (const auto& c : cases) row(c.name, to_string(c.split), c.summary);
    row("all", "", summary);
    return out.str();
}

Aggregate EvalReport::recompute(const json& report) {
    std::vector<RunResult> runs;
    for (const auto& c : report.at("cases"))
        for (const auto& r : c.at("runs")) {
            RunResult rr;
            const auto& trace = r.at("trace");
            rr.success = !trace.empty() && trace.back().at("target").get<bool>() && trace.back().at("lifted").get<bool>();
            rr.motions = static_cast<int>(trace.size());
            runs.push_back(rr);
        }
    return aggregate(runs);
}

}  // namespace vlg::eval
