// One pass/fail line per acceptance criterion. `acceptance --criterion N` runs one.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "vlg/common/errors.hpp"
#include "vlg/eval/eval.hpp"
#include "vlg/grasp/grasp.hpp"
#include "vlg/sac/gradcheck.hpp"
#include "vlg/sac/trainer.hpp"
#include "vlg/sim/scene.hpp"

using namespace vlg;
namespace fs = std::filesystem;

namespace {

struct Context {
    sim::WorldData world;
    fs::path source;  // repository root, for shipped configs and suites
    fs::path work;    // scratch output
};

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const Context& ctx, const std::string& name) {
    const fs::path p = ctx.work / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ---- 1 ----------------------------------------------------------------------

Verdict gradient_integrity(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto checks = sac::micro_grad_check(ctx.world, {.width = 16, .boxes = 3, .grasps = 4});
    double worst = 0.0;
    std::string where;
    bool ok = checks.size() == 15;
    for (const auto& c : checks) {
        ok = ok && c.result.max_rel_error < 1e-4;
        if (c.result.max_rel_error >= worst) {
            worst = c.result.max_rel_error;
            where = policy::to_string(c.mode) + "/" + c.loss;
        }
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 120.0,
            fmt("%zu checks (3 modes x critic, actor, alpha, alpha_literal, kl), max rel %.2e at %s, %.1f s", checks.size(),
                worst, where.c_str(), secs)};
}

// ---- 2 ----------------------------------------------------------------------

Verdict formula_suite(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    const double dmax = sim::Workspace{}.dist_max();
    sim::GraspOutcome target{.success = true, .grasped_uid = 0, .target = true};
    sim::GraspOutcome far{.success = true, .grasped_uid = 1, .target_distance = dmax};
    sim::GraspOutcome half{.success = true, .grasped_uid = 1, .target_distance = dmax / 2};
    expect(sim::compute_reward(target, sim::Stage::two, dmax) == 2.0, "reward +2");
    expect(std::abs(sim::compute_reward(far, sim::Stage::two, dmax) + 1.0) < 1e-12, "reward -1.0 at dist_max");
    expect(std::abs(sim::compute_reward(half, sim::Stage::two, dmax) + 0.5) < 1e-12, "reward -0.5 at dist_max/2");
    expect(sim::compute_reward(sim::GraspOutcome{}, sim::Stage::two, dmax) == -1.0, "reward -1 on failure");

    Rng rng(2024);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    int mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<sim::ObjectBox> boxes(1 + uniform_index(rng, 8));
        std::vector<grasp::GraspPose> grasps(1 + uniform_index(rng, 12));
        for (auto& b : boxes) b.center = {u(rng), u(rng), 0.1 * u(rng)};
        for (auto& g : grasps) g.position = {u(rng), u(rng), 0.1 * u(rng)};
        const auto m = grasp::box_grasp_mapping(boxes, grasps);
        for (std::size_t i = 0; i < boxes.size(); ++i)
            for (std::size_t j = 0; j < grasps.size(); ++j) {
                double d2 = 0.0;
                for (int a = 0; a < 3; ++a) d2 += std::pow(boxes[i].center[a] - grasps[j].position[a], 2);
                mismatches += m.at(static_cast<int>(i), static_cast<int>(j)) != (d2 < 0.05 * 0.05);
            }

        std::vector<double> probs(boxes.size());
        for (double& p : probs) p = u(rng);
        const double z = std::accumulate(probs.begin(), probs.end(), 0.0);
        for (double& p : probs) p /= z;
        const auto prior = grasp::grounding_prior(probs, m);
        const double sum = std::accumulate(prior.begin(), prior.end(), 0.0);
        expect(std::abs(sum - 1.0) < 1e-12, "prior sums to 1");
        for (double p : prior) expect(p > 0.0, "prior entries positive");
    }
    expect(mismatches == 0, "mapping matches brute force");

    expect(std::abs(policy::kl_guided_loss({0.75, 0.25}, {0.5, 0.5}) - 0.130812) <= 1e-6, "KL 0.130812");
    expect(std::abs(sac::actor_objective({0.5, 0.5}, {0, 0}, {0, 0}, 1.0) + 0.693147) <= 1e-6, "actor -0.693147");
    expect(sac::critic_target(2.0, true, 0.99, 5.0) == 2.0, "terminal y = r");

    const double secs = seconds_since(t0);
    std::string detail = fmt("rewards, 100 mapping instances, prior sums, KL, actor, terminal target; %.2f s", secs);
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty() && secs < 60.0, detail};
}

// ---- 3 ----------------------------------------------------------------------

Verdict permutation_properties(const Context& ctx) {
    policy::ModelConfig mc;
    mc.attention.width = 64;
    mc.attention.heads = 4;
    policy::FusionModel model(mc);
    Rng init(3);
    model.init(init);
    const encoder::AlignedEncoder enc(ctx.world.library, ctx.world.keywords,
                                      encoder::EncoderConfig{.width = 64, .sigma_align = 0.3});
    Rng rng(33);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
        const auto ins = sim::sample_instruction(rng, ctx.world.keywords);
        sim::Scene scene;
        try {
            scene = sim::sample_scene(rng, 2 + static_cast<int>(uniform_index(rng, 10)), ctx.world.library,
                                      sim::Workspace{}, &ins, {.layout = sim::Layout::cluttered});
        } catch (const PlacementError&) {
            continue;
        }
        sim::Episode ep(std::move(scene), ins, {.stage = sim::Stage::two}, rng());
        if (!ep.observation().actionable()) continue;
        const auto e = policy::encode_observation(ep.observation(), enc);
        const auto pi = policy::policy_forward(model, e);
        const auto q = policy::critic_forward(model, e);

        std::vector<int> bp(static_cast<std::size_t>(e.boxes())), gp(static_cast<std::size_t>(e.actions()));
        std::iota(bp.begin(), bp.end(), 0);
        std::iota(gp.begin(), gp.end(), 0);
        std::shuffle(bp.begin(), bp.end(), rng);
        std::shuffle(gp.begin(), gp.end(), rng);
        auto eb = e;
        for (std::size_t i = 0; i < bp.size(); ++i) {
            eb.box_feats.row(static_cast<Eigen::Index>(i)) = e.box_feats.row(bp[i]);
            eb.centers[i] = e.centers[static_cast<std::size_t>(bp[i])];
        }
        auto eg = e;
        for (std::size_t i = 0; i < gp.size(); ++i) eg.grasps[i] = e.grasps[static_cast<std::size_t>(gp[i])];

        const auto pib = policy::policy_forward(model, eb);
        const auto qb = policy::critic_forward(model, eb);
        const auto pig = policy::policy_forward(model, eg);
        const auto qg = policy::critic_forward(model, eg);
        for (std::size_t k = 0; k < pi.size(); ++k) {
            const auto src = static_cast<std::size_t>(gp[k]);
            worst = std::max({worst, std::abs(pib[k] - pi[k]), std::abs(qb.q1[k] - q.q1[k]), std::abs(qb.q2[k] - q.q2[k]),
                              std::abs(pig[k] - pi[src]), std::abs(qg.q1[k] - q.q1[src]), std::abs(qg.q2[k] - q.q2[src])});
        }
        ++done;
    }
    return {worst <= 1e-9, fmt("100 simulated observations, max deviation %.2e (bound 1e-9)", worst)};
}

// ---- 4 ----------------------------------------------------------------------

sac::TrainConfig stage_one_config() {
    sac::TrainConfig c;
    c.seed = 1;
    c.model.attention.width = 64;
    c.model.attention.heads = 4;
    c.encoder.width = 64;
    c.encoder.sigma_align = 0.0;
    c.guided.enabled = false;
    c.stage1 = {.objects = 2, .episodes = 200, .attempt_limit = 5, .layout = sim::Layout::scattered};
    c.stage2.episodes = 0;
    c.checkpoint_every = 0;
    return c;
}

Verdict stage_one_convergence(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const sac::TrainConfig c = stage_one_config();
    sac::Trainer trainer(c, ctx.world);
    const auto logs = trainer.run();
    int last50 = 0;
    for (std::size_t i = logs.size() - 50; i < logs.size(); ++i) last50 += logs[i].success;

    // greedy rollouts on 50 fresh Stage I episodes from the training distribution
    Rng rng(mix_seed(c.seed, 99));
    int greedy = 0;
    for (int e = 0; e < 50; ++e) {
        const auto ins = sim::sample_instruction(rng, ctx.world.keywords);
        auto scene = sim::sample_scene(rng, c.stage1.objects, ctx.world.library, sim::Workspace{}, &ins);
        sim::Episode ep(std::move(scene), ins, {.stage = sim::Stage::one, .attempt_limit = c.stage1.attempt_limit}, rng());
        while (!ep.done()) {
            const auto& obs = ep.observation();
            if (!obs.actionable()) {
                ep.fail_attempt();
                continue;
            }
            const auto pi = policy::policy_forward(trainer.model(), policy::encode_observation(obs, trainer.encoder()));
            ep.step(policy::select_action(pi, policy::ActionMode::greedy, rng));
        }
        greedy += ep.success();
    }
    const double rate = greedy / 50.0;
    const double secs = seconds_since(t0);
    return {rate >= 0.9 && secs < 600.0,
            fmt("a=2, sigma=0, 200 episodes, seed 1: greedy success %.2f on 50 episodes (need >= 0.90); "
                "sampled success over the last 50 training episodes %.2f; %.0f s",
                rate, last50 / 50.0, secs)};
}

// ---- 5 ----------------------------------------------------------------------

Verdict curriculum_ordering(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const sac::TrainConfig c = sac::TrainConfig::load(ctx.source / "configs" / "scaled.json");
    const fs::path out = fresh_dir(ctx, "curriculum");
    sac::Trainer trainer(c, ctx.world);
    trainer.run({.out_dir = out});
    const double train_secs = seconds_since(t0);

    const auto suite = eval::Suite::load(ctx.source / "suites" / "seen.json", ctx.world);
    const eval::EvalOptions opts{.runs_per_case = 15, .seed = 7, .run = {.proposals = c.proposals}};
    const auto ours = eval::evaluate(eval::model_policy(trainer.model(), trainer.encoder()), suite, opts).summary;
    const auto grounding = eval::evaluate(eval::grounding_policy(trainer.encoder()), suite, opts).summary;
    const auto random = eval::evaluate(eval::random_policy(), suite, opts).summary;
    const bool pass = ours.success_rate >= random.success_rate + 20.0 && ours.success_rate >= grounding.success_rate;
    const double secs = seconds_since(t0);
    return {pass && secs < 3600.0,
            fmt("a=%d/%d, b=%d/%d, sigma=%.1f, width %d; seen suite %zu cases x 15: policy %.1f%%, grounding %.1f%%, "
                "random %.1f%% (need policy >= random+20 and >= grounding); train %.0f s, total %.0f s",
                c.stage1.objects, c.stage1.episodes, c.stage2.objects, c.stage2.episodes, c.encoder.sigma_align,
                c.model.attention.width, suite.cases.size(), ours.success_rate, grounding.success_rate,
                random.success_rate, train_secs, secs)};
}

// ---- 6 ----------------------------------------------------------------------

Verdict guided_window(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    sac::TrainConfig c = sac::TrainConfig::load(ctx.source / "configs" / "scaled.json");
    const int window = c.guided.window;
    c.stage2.episodes = 40;  // enough to see the window close
    c.checkpoint_every = 0;
    sac::Trainer trainer(c, ctx.world);
    const auto logs = trainer.run();
    int inside = 0, inside_nonzero = 0, after_present = 0, after = 0;
    for (const auto& l : logs) {
        const bool has = l.to_json().contains("kl");
        if (l.episode < window) {
            if (l.updates > 0) {
                ++inside;
                inside_nonzero += has && *l.kl != 0.0;
            }
        } else {
            ++after;
            after_present += has;
        }
    }
    const bool window_ok = inside > 0 && inside_nonzero == inside && after > 0 && after_present == 0;

    // guidance switched off vs a config that never had any
    sac::TrainConfig off = c, none = c;
    off.stage1.episodes = 30, off.stage2.episodes = 20;
    none.stage1 = off.stage1, none.stage2 = off.stage2;
    off.guided.enabled = false;
    none.guided.weight = 0.0;
    none.guided.window = 0;
    const auto a = fresh_dir(ctx, "guided_off"), b = fresh_dir(ctx, "guided_none");
    sac::Trainer(off, ctx.world).run({.out_dir = a});
    sac::Trainer(none, ctx.world).run({.out_dir = b});
    const bool identical = read_file(a / "metrics.jsonl") == read_file(b / "metrics.jsonl") &&
                           !read_file(a / "metrics.jsonl").empty();
    return {window_ok && identical,
            fmt("window %d: kl logged and nonzero in %d/%d updating episodes before it, present in %d/%d after; "
                "guidance off vs no-guidance config metrics %s; %.0f s",
                window, inside_nonzero, inside, after_present, after, identical ? "identical" : "DIFFER",
                seconds_since(t0))};
}

// ---- 7 ----------------------------------------------------------------------

Verdict determinism(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    sac::TrainConfig c = sac::TrainConfig::load(ctx.source / "configs" / "scaled.json");
    c.stage1.episodes = 30;
    c.stage2.episodes = 20;
    c.guided.window = 40;
    c.checkpoint_every = 0;
    const auto a = fresh_dir(ctx, "det_a"), b = fresh_dir(ctx, "det_b");
    sac::Trainer(c, ctx.world).run({.out_dir = a});
    sac::Trainer(c, ctx.world).run({.out_dir = b});
    const std::string ma = read_file(a / "metrics.jsonl");
    const bool train_same = !ma.empty() && ma == read_file(b / "metrics.jsonl");

    const fs::path ckpt = a / sac::checkpoint_name(50);
    const auto suite = eval::Suite::load(ctx.source / "suites" / "seen.json", ctx.world);
    auto report = [&] {
        auto loaded = sac::load_policy(policy::read_checkpoint(ckpt), ctx.world);
        auto rep = eval::evaluate(eval::model_policy(*loaded.model, loaded.encoder), suite,
                                  {.runs_per_case = 3, .seed = 5, .run = {.proposals = loaded.config.proposals}});
        rep.config_hash = loaded.config.hash();
        return rep.to_json().dump();
    };
    const std::string before = read_file(ckpt);
    const std::string r1 = report(), r2 = report();
    const bool eval_same = r1 == r2;
    const bool untouched = read_file(ckpt) == before;
    return {train_same && eval_same && untouched,
            fmt("50-episode training twice: metrics %s (%zu bytes); eval twice on one checkpoint: reports %s; "
                "checkpoint %s; %.0f s",
                train_same ? "identical" : "DIFFER", ma.size(), eval_same ? "identical" : "DIFFER",
                untouched ? "unchanged" : "MODIFIED", seconds_since(t0))};
}

// ---- 8 ----------------------------------------------------------------------

Verdict grounding_monotonicity(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto suite = eval::make_suite("scattered", {.cases = 1000, .objects = 8, .layout = sim::Layout::scattered,
                                                      .targets_at_bottom = false},
                                        808, ctx.world);
    std::vector<double> rates;
    std::string levels;
    for (double sigma : {0.0, 0.3, 0.6}) {
        const encoder::AlignedEncoder enc(ctx.world.library, ctx.world.keywords,
                                          encoder::EncoderConfig{.sigma_align = sigma});
        const auto rep = eval::evaluate(eval::grounding_policy(enc), suite, {.runs_per_case = 1, .seed = 8});
        rates.push_back(rep.summary.success_rate);
        int first = 0;
        for (const auto& c : rep.cases) first += c.runs[0].success && c.runs[0].motions == 1;
        levels += fmt("%s%.1f: %.1f%% (first attempt %.1f%%)", levels.empty() ? "" : ", ", sigma,
                      rep.summary.success_rate, first / 10.0);
    }
    const bool pass = rates[1] <= rates[0] && rates[2] <= rates[1];
    return {pass, fmt("1000 scattered scenes per level, sigma %s (need non-increasing); %.0f s", levels.c_str(),
                      seconds_since(t0))};
}

const char* const kNames[] = {"gradient integrity",     "formula suite",       "permutation properties",
                              "Stage I convergence",    "curriculum ordering", "guided-loss window",
                              "determinism",            "grounding-noise monotonicity"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> which;
    std::string work = (fs::temp_directory_path() / "vlg_acceptance").string();
    app.add_option("--criterion", which, "Criterion number(s), 1-8 (default: all)")->check(CLI::Range(1, 8));
    app.add_option("--work", work, "Scratch directory");
    CLI11_PARSE(app, argc, argv);
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

    Context ctx{sim::WorldData::load(sim::WorldData::default_dir()), VLG_SOURCE_DIR, work};
    fs::create_directories(ctx.work);
    using Fn = Verdict (*)(const Context&);
    const Fn fns[] = {gradient_integrity, formula_suite,   permutation_properties, stage_one_convergence,
                      curriculum_ordering, guided_window, determinism,            grounding_monotonicity};
    bool all = true;
    for (int n : which) {
        Verdict v;
        try {
            v = fns[n - 1](ctx);
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %d %s: %s - %s\n", n, v.pass ? "PASS" : "FAIL", kNames[n - 1], v.detail.c_str());
        std::fflush(stdout);
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
