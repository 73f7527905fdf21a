#include "vlg/sac/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "vlg/common/errors.hpp"

namespace vlg::sac {

using nlohmann::json;

double GuidedConfig::beta(int episode) const {
    if (!enabled || window <= 0 || episode >= window || weight == 0.0) return 0.0;
    return weight * (1.0 - static_cast<double>(episode) / window);
}

std::string to_string(sim::Layout l) { return l == sim::Layout::scattered ? "scattered" : "cluttered"; }

sim::Layout layout_from_string(const std::string& s) {
    if (s == "scattered") return sim::Layout::scattered;
    if (s == "cluttered") return sim::Layout::cluttered;
    throw ConfigError("unknown layout '" + s + "' (scattered, cluttered)");
}

namespace {

// Rejects keys the reader does not know, so typos fail loudly.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : j.items())
        if (!ok.count(k)) throw ConfigError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

json stage_json(const StageConfig& s) {
    return {{"objects", s.objects},
            {"episodes", s.episodes},
            {"attempt_limit", s.attempt_limit},
            {"layout", to_string(s.layout)},
            {"targets_at_bottom", s.targets_at_bottom}};
}

StageConfig stage_from(const json& j, const std::string& where, StageConfig s) {
    check_keys(j, where, {"objects", "episodes", "attempt_limit", "layout", "targets_at_bottom"});
    s.objects = j.value("objects", s.objects);
    s.episodes = j.value("episodes", s.episodes);
    s.attempt_limit = j.value("attempt_limit", s.attempt_limit);
    s.layout = layout_from_string(j.value("layout", to_string(s.layout)));
    s.targets_at_bottom = j.value("targets_at_bottom", s.targets_at_bottom);
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    model.attention.validate();
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (!(sac.gamma >= 0.0 && sac.gamma <= 1.0)) fail("sac.gamma must lie in [0, 1]");
    if (!(sac.lr >= 0.0)) fail("sac.lr must be non-negative");
    if (!(sac.alpha_init > 0.0) && !(sac.alpha_init == 0.0 && !sac.auto_alpha))
        fail("sac.alpha_init must be positive (zero only with auto_alpha off)");
    if (sac.batch_size < 1) fail("sac.batch_size must be at least 1");
    if (!(sac.tau >= 0.0 && sac.tau <= 1.0)) fail("sac.tau must lie in [0, 1]");
    if (sac.updates_per_step < 0) fail("sac.updates_per_step must be non-negative");
    if (sac.replay_capacity < sac.batch_size) fail("sac.replay_capacity must be at least the batch size");
    if (!(guided.weight >= 0.0)) fail("guided.weight must be non-negative");
    if (guided.window < 0) fail("guided.window must be non-negative");
    for (const auto* s : {&stage1, &stage2}) {
        if (s->objects < 1) fail("stage objects must be at least 1");
        if (s->episodes < 0) fail("stage episodes must be non-negative");
        if (s->attempt_limit < 1) fail("stage attempt_limit must be at least 1");
    }
    if (checkpoint_every < 0) fail("checkpoint_every must be non-negative");
    if (!(encoder.sigma_align >= 0.0)) fail("encoder.sigma_align must be non-negative");
    if (proposals.k_max < 1) fail("proposals.k_max must be at least 1");
}

json TrainConfig::to_json() const {
    return {{"seed", seed},
            {"model", model.to_json()},
            {"encoder", {{"basis_seed", encoder.basis_seed}, {"sigma_align", encoder.sigma_align}}},
            {"proposals",
             {{"k_max", proposals.k_max},
              {"position_jitter", proposals.position_jitter},
              {"quality_jitter", proposals.quality_jitter},
              {"min_visible_pixels", proposals.min_visible_pixels}}},
            {"sac",
             {{"gamma", sac.gamma},
              {"lr", sac.lr},
              {"alpha_init", sac.alpha_init},
              {"auto_alpha", sac.auto_alpha},
              {"alpha_literal", sac.alpha_literal},
              {"target_entropy_ratio", sac.target_entropy_ratio},
              {"batch_size", sac.batch_size},
              {"tau", sac.tau},
              {"updates_per_step", sac.updates_per_step},
              {"replay_capacity", sac.replay_capacity}}},
            {"guided",
             {{"enabled", guided.enabled},
              {"weight", guided.weight},
              {"window", guided.window},
              {"kl_direction", policy::to_string(guided.direction)},
              {"temperature", guided.temperature},
              {"mapping_threshold", guided.mapping_threshold}}},
            {"curriculum", {{"stage1", stage_json(stage1)}, {"stage2", stage_json(stage2)}}},
            {"checkpoint_every", checkpoint_every},
            {"data_dir", data_dir}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    check_keys(j, "", {"seed", "model", "encoder", "proposals", "sac", "guided", "curriculum", "checkpoint_every", "data_dir"});
    TrainConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) {
        check_keys(j["model"], "model", {"mode", "width", "heads", "layers", "ffn_ratio", "scale", "bands"});
        c.model = policy::ModelConfig::from_json(j["model"]);
    }
    if (j.contains("encoder")) {
        const auto& e = j["encoder"];
        check_keys(e, "encoder", {"basis_seed", "sigma_align"});
        c.encoder.basis_seed = e.value("basis_seed", c.encoder.basis_seed);
        c.encoder.sigma_align = e.value("sigma_align", c.encoder.sigma_align);
    }
    if (j.contains("proposals")) {
        const auto& p = j["proposals"];
        check_keys(p, "proposals", {"k_max", "position_jitter", "quality_jitter", "min_visible_pixels"});
        c.proposals.k_max = p.value("k_max", c.proposals.k_max);
        c.proposals.position_jitter = p.value("position_jitter", c.proposals.position_jitter);
        c.proposals.quality_jitter = p.value("quality_jitter", c.proposals.quality_jitter);
        c.proposals.min_visible_pixels = p.value("min_visible_pixels", c.proposals.min_visible_pixels);
    }
    if (j.contains("sac")) {
        const auto& s = j["sac"];
        check_keys(s, "sac", {"gamma", "lr", "alpha_init", "auto_alpha", "alpha_literal", "target_entropy_ratio",
                              "batch_size", "tau", "updates_per_step", "replay_capacity"});
        c.sac.gamma = s.value("gamma", c.sac.gamma);
        c.sac.lr = s.value("lr", c.sac.lr);
        c.sac.alpha_init = s.value("alpha_init", c.sac.alpha_init);
        c.sac.auto_alpha = s.value("auto_alpha", c.sac.auto_alpha);
        c.sac.alpha_literal = s.value("alpha_literal", c.sac.alpha_literal);
        c.sac.target_entropy_ratio = s.value("target_entropy_ratio", c.sac.target_entropy_ratio);
        c.sac.batch_size = s.value("batch_size", c.sac.batch_size);
        c.sac.tau = s.value("tau", c.sac.tau);
        c.sac.updates_per_step = s.value("updates_per_step", c.sac.updates_per_step);
        c.sac.replay_capacity = s.value("replay_capacity", c.sac.replay_capacity);
    }
    if (j.contains("guided")) {
        const auto& g = j["guided"];
        check_keys(g, "guided", {"enabled", "weight", "window", "kl_direction", "temperature", "mapping_threshold"});
        c.guided.enabled = g.value("enabled", c.guided.enabled);
        c.guided.weight = g.value("weight", c.guided.weight);
        c.guided.window = g.value("window", c.guided.window);
        c.guided.direction = policy::kl_direction_from_string(g.value("kl_direction", policy::to_string(c.guided.direction)));
        c.guided.temperature = g.value("temperature", c.guided.temperature);
        c.guided.mapping_threshold = g.value("mapping_threshold", c.guided.mapping_threshold);
    }
    if (j.contains("curriculum")) {
        const auto& cu = j["curriculum"];
        check_keys(cu, "curriculum", {"stage1", "stage2"});
        if (cu.contains("stage1")) c.stage1 = stage_from(cu["stage1"], "curriculum.stage1", c.stage1);
        if (cu.contains("stage2")) c.stage2 = stage_from(cu["stage2"], "curriculum.stage2", c.stage2);
    }
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.encoder.width = c.model.attention.width;
    c.validate();
    return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::type_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

std::string TrainConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

}  // namespace vlg::sac
