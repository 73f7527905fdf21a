// vlgrasp: train, evaluate and inspect the language-conditioned grasping policy.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "vlg/common/errors.hpp"
#include "vlg/eval/eval.hpp"
#include "vlg/sac/gradcheck.hpp"
#include "vlg/sac/trainer.hpp"
#include "vlg/sim/io.hpp"

using namespace vlg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string resume;
    int log_every = 10;
};

int cmd_train(const TrainArgs& a) {
    sac::TrainConfig config = sac::TrainConfig::load(a.config);
    if (a.seed) config.seed = *a.seed;
    sac::Trainer trainer(config, sac::load_world(config));
    sac::TrainOptions opts{.out_dir = a.out};
    if (!a.resume.empty()) opts.resume = a.resume;
    int successes = 0, seen = 0;
    opts.on_episode = [&](const sac::EpisodeLog& l) {
        successes += l.success;
        ++seen;
        if (a.log_every > 0 && (l.episode + 1) % a.log_every == 0) {
            std::fprintf(stderr, "episode %d  stage %s  success %.2f  alpha %.4f  beta %.3f\n", l.episode + 1,
                         sim::to_string(l.stage).c_str(), static_cast<double>(successes) / seen, l.alpha, l.beta);
            successes = seen = 0;
        }
    };
    std::fprintf(stderr, "config %s  seed %llu  episodes %d\n", config.hash().c_str(),
                 static_cast<unsigned long long>(config.seed), config.total_episodes());
    trainer.run(opts);
    std::printf("%s\n", (fs::path(a.out) / sac::checkpoint_name(trainer.episode())).string().c_str());
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string suite;
    int runs = 15;
    std::uint64_t seed = 0;
    std::string baseline = "policy";
    std::optional<double> sigma;
    int width = 512;
    std::string out;
};

// Everything needed to act: the policy and the encoder it sees through.
struct Actor {
    std::optional<sac::LoadedPolicy> loaded;
    std::optional<encoder::AlignedEncoder> encoder;
    eval::PolicyFn fn;
    std::string config_hash;
    grasp::ProposalConfig proposals;
};

Actor make_actor(const std::string& checkpoint, const std::string& baseline, std::optional<double> sigma, int width,
                 const sim::WorldData& world) {
    Actor a;
    if (!checkpoint.empty()) {
        a.loaded = sac::load_policy(policy::read_checkpoint(checkpoint), world);
        if (sigma && *sigma != a.loaded->config.encoder.sigma_align)
            throw ConfigError("--sigma conflicts with the checkpoint's encoder noise");
        a.config_hash = a.loaded->config.hash();
        a.proposals = a.loaded->config.proposals;
    } else {
        if (baseline == "policy") throw ConfigError("eval: --baseline policy needs --checkpoint");
        a.encoder.emplace(world.library, world.keywords,
                          encoder::EncoderConfig{.width = width, .sigma_align = sigma.value_or(0.0)});
        json record{{"baseline", baseline}, {"width", width}, {"sigma_align", sigma.value_or(0.0)}};
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(record.dump())));
        a.config_hash = buf;
    }
    const encoder::AlignedEncoder& enc = a.loaded ? a.loaded->encoder : *a.encoder;
    if (baseline == "policy") a.fn = eval::model_policy(*a.loaded->model, enc);
    else if (baseline == "grounding") a.fn = eval::grounding_policy(enc);
    else if (baseline == "random") a.fn = eval::random_policy();
    else if (baseline == "oracle") a.fn = eval::oracle_policy();
    else if (baseline == "fail") a.fn = eval::fail_policy();
    else throw ConfigError("unknown baseline '" + baseline + "'");
    return a;
}

sim::WorldData world_for(const std::string& checkpoint) {
    if (checkpoint.empty()) return sim::WorldData::load(sim::WorldData::default_dir());
    const auto header = policy::read_checkpoint(checkpoint).header;
    return sac::load_world(sac::TrainConfig::from_json(header.at("config")));
}

std::string format_motion(const std::optional<double>& m) {
    if (!m) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *m);
    return buf;
}

int cmd_eval(const EvalArgs& a) {
    const sim::WorldData world = world_for(a.checkpoint);
    const eval::Suite suite = eval::Suite::load(a.suite, world);
    Actor actor = make_actor(a.checkpoint, a.baseline, a.sigma, a.width, world);
    eval::EvalReport rep =
        eval::evaluate(actor.fn, suite, {.runs_per_case = a.runs, .seed = a.seed, .run = {.proposals = actor.proposals}});
    rep.policy = a.baseline;
    rep.config_hash = actor.config_hash;
    for (const auto& c : rep.cases)
        std::printf("%-24s %-16s %6.1f%%  %s\n", c.name.c_str(), eval::to_string(c.split).c_str(), c.summary.success_rate,
                    format_motion(c.summary.motion_number).c_str());
    std::printf("%-24s %-16s %6.1f%%  %s\n", "all", "", rep.summary.success_rate,
                format_motion(rep.summary.motion_number).c_str());
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream(fs::path(a.out) / "report.json") << rep.to_json().dump(2) << "\n";
        std::ofstream(fs::path(a.out) / "report.csv") << rep.to_csv();
    }
    return 0;
}

struct GradArgs {
    std::uint64_t seed = 1;
    int width = 16;
    bool inject_fault = false;
};

int cmd_gradcheck(const GradArgs& a) {
    sac::MicroCheckOptions o{.width = a.width, .seed = a.seed};
    if (a.inject_fault) o.fault = nn::GradFault{0, 0, 1.0};
    bool ok = true;
    for (const auto& c : sac::micro_grad_check(sim::WorldData::load(sim::WorldData::default_dir()), o)) {
        std::printf("%-16s %-14s max_rel %.3e  %s  %s\n", policy::to_string(c.mode).c_str(), c.loss.c_str(),
                    c.result.max_rel_error, c.passed ? "ok" : "FAIL", c.result.worst_param.c_str());
        ok = ok && c.passed;
    }
    return ok ? 0 : kExitRuntime;
}

struct RenderArgs {
    std::string scene;
    std::string suite;
    std::string case_name;
    std::string checkpoint;
    std::string baseline = "oracle";
    std::optional<double> sigma;
    int width = 512;
    std::uint64_t seed = 0;
    int scale = 2;
    std::string out;
};

int cmd_render(const RenderArgs& a) {
    fs::create_directories(a.out);
    if (!a.scene.empty()) {
        std::ifstream in(a.scene);
        if (!in) throw ConfigError("render: cannot open " + a.scene);
        const sim::Scene scene = sim::scene_from_json(json::parse(in));
        sim::render_png(fs::path(a.out) / "scene.png", scene, {.scale = a.scale});
        return 0;
    }
    if (a.suite.empty()) throw ConfigError("render: give --scene or --suite");
    const sim::WorldData world = world_for(a.checkpoint);
    const eval::Suite suite = eval::Suite::load(a.suite, world);
    const eval::TestCase* tc = nullptr;
    for (const auto& c : suite.cases)
        if (c.name == a.case_name || a.case_name.empty()) {
            tc = &c;
            break;
        }
    if (!tc) throw ConfigError("render: no case named '" + a.case_name + "'");
    Actor actor = make_actor(a.checkpoint, a.baseline, a.sigma, a.width, world);

    // one frame per attempt with the chosen grasp in red, then the final table
    Rng rng(mix_seed(a.seed, 0));
    sim::Episode ep(tc->scene, tc->instruction, {.stage = sim::Stage::two, .proposals = actor.proposals}, rng());
    json trace = json::array();
    int frame = 0;
    auto frame_path = [&](int i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "step_%02d.png", i);
        return fs::path(a.out) / buf;
    };
    while (!ep.done()) {
        const sim::Observation obs = ep.observation();
        const eval::Decision d = actor.fn(eval::PolicyInput{obs, ep.scene()}, rng);
        sim::render_png(frame_path(frame++), ep.scene(),
                        {.scale = a.scale, .boxes = &obs.boxes, .grasps = &obs.grasps, .highlight_grasp = d.action});
        const sim::StepResult r = d.action < 0 ? ep.fail_attempt() : ep.step(d.action);
        json step{{"action", d.action}, {"reward", r.reward}, {"lifted", r.outcome.success}, {"target", r.outcome.target}};
        if (!d.box_attention.empty()) step["box_attention"] = d.box_attention;
        trace.push_back(step);
    }
    sim::render_png(frame_path(frame), ep.scene(), {.scale = a.scale});
    std::ofstream(fs::path(a.out) / "trace.json")
        << json{{"case", tc->name}, {"instruction", tc->instruction.text()}, {"success", ep.success()},
                {"config_hash", actor.config_hash}, {"seed", a.seed}, {"steps", trace}}
               .dump(2)
        << "\n";
    std::printf("%s: %s in %d attempts\n", tc->name.c_str(), ep.success() ? "success" : "failure", ep.attempts());
    return 0;
}

struct SuiteArgs {
    std::string name;
    std::string split = "seen";
    int cases = 10;
    int objects = 8;
    std::string layout = "cluttered";
    bool targets_at_bottom = true;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_make_suite(const SuiteArgs& a) {
    const sim::WorldData world = sim::WorldData::load(sim::WorldData::default_dir());
    const eval::SuiteSpec spec{.split = eval::split_from_string(a.split),
                               .cases = a.cases,
                               .objects = a.objects,
                               .layout = sac::layout_from_string(a.layout),
                               .targets_at_bottom = a.targets_at_bottom};
    const auto suite = eval::make_suite(a.name.empty() ? a.split : a.name, spec, a.seed, world);
    suite.save(a.out);
    std::printf("%s: %zu cases\n", a.out.c_str(), suite.cases.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Language-conditioned target grasping in clutter"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Run the two-stage curriculum");
    t->add_option("--config", train.config, "Training config (JSON)")->required()->check(CLI::ExistingFile);
    t->add_option("--seed", train.seed, "Override the config seed");
    t->add_option("--out", train.out, "Output directory")->required();
    t->add_option("--resume", train.resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
    t->add_option("--log-every", train.log_every, "Progress line every N episodes (0: quiet)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline on a suite");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
    e->add_option("--suite", ev.suite, "Suite file (JSON)")->required()->check(CLI::ExistingFile);
    e->add_option("--runs", ev.runs, "Runs per case")->check(CLI::PositiveNumber);
    e->add_option("--seed", ev.seed, "Evaluation seed");
    e->add_option("--baseline", ev.baseline, "policy | grounding | random | oracle | fail")
        ->check(CLI::IsMember({"policy", "grounding", "random", "oracle", "fail"}));
    e->add_option("--sigma", ev.sigma, "Encoder noise when no checkpoint is given");
    e->add_option("--width", ev.width, "Encoder width when no checkpoint is given");
    e->add_option("--out", ev.out, "Directory for report.json and report.csv");

    GradArgs gc;
    auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every loss at micro scale");
    g->add_option("--seed", gc.seed, "Seed for the observation and weights");
    g->add_option("--width", gc.width, "Feature width");
    g->add_flag("--inject-fault", gc.inject_fault, "Corrupt one analytic gradient entry (negative control)");

    RenderArgs rd;
    auto* r = app.add_subcommand("render", "Render a scene, or a suite case rollout as a PNG sequence");
    r->add_option("--scene", rd.scene, "Scene file (JSON)")->check(CLI::ExistingFile);
    r->add_option("--suite", rd.suite, "Suite file (JSON)")->check(CLI::ExistingFile);
    r->add_option("--case", rd.case_name, "Case name (default: first)");
    r->add_option("--checkpoint", rd.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
    r->add_option("--baseline", rd.baseline, "policy | grounding | random | oracle | fail")
        ->check(CLI::IsMember({"policy", "grounding", "random", "oracle", "fail"}));
    r->add_option("--sigma", rd.sigma, "Encoder noise when no checkpoint is given");
    r->add_option("--width", rd.width, "Encoder width when no checkpoint is given");
    r->add_option("--seed", rd.seed, "Rollout seed");
    r->add_option("--scale", rd.scale, "Pixels per workspace pixel")->check(CLI::Range(1, 8));
    r->add_option("--out", rd.out, "Output directory")->required();

    SuiteArgs ms;
    auto* m = app.add_subcommand("make-suite", "Generate a suite file from a seed");
    m->add_option("--name", ms.name, "Suite name (default: the split)");
    m->add_option("--split", ms.split, "seen | unseen_objects | unseen_templates")
        ->check(CLI::IsMember({"seen", "unseen_objects", "unseen_templates"}));
    m->add_option("--cases", ms.cases, "Number of cases")->check(CLI::PositiveNumber);
    m->add_option("--objects", ms.objects, "Objects per scene")->check(CLI::PositiveNumber);
    m->add_option("--layout", ms.layout, "scattered | cluttered")->check(CLI::IsMember({"scattered", "cluttered"}));
    m->add_option("--targets-at-bottom", ms.targets_at_bottom, "Place targets first so others pile on them");
    m->add_option("--seed", ms.seed, "Suite seed");
    m->add_option("--out", ms.out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (t->parsed()) return cmd_train(train);
        if (e->parsed()) return cmd_eval(ev);
        if (g->parsed()) return cmd_gradcheck(gc);
        if (r->parsed()) return cmd_render(rd);
        if (m->parsed()) return cmd_make_suite(ms);
    } catch (const ConfigError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitUsage;
    } catch (const UsageError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitUsage;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
