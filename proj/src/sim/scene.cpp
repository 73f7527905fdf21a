#include "vlg/sim/scene.hpp"

#include <algorithm>
#include <numbers>

#include "vlg/common/errors.hpp"

namespace vlg::sim {

bool ObjectInstance::covers(double px, double py) const {
    const double dx = px - x, dy = py - y;
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    switch (spec.shape) {
        case Shape::circle: return lx * lx + ly * ly <= 0.25 * spec.length * spec.length;
        case Shape::square: return std::abs(lx) <= 0.5 * spec.length && std::abs(ly) <= 0.5 * spec.length;
        case Shape::elongated: return std::abs(lx) <= 0.5 * spec.length && std::abs(ly) <= 0.5 * spec.width;
    }
    return false;
}

namespace {

double bounding_radius(const ObjectSpec& s) {
    return s.shape == Shape::circle ? 0.5 * s.length : 0.5 * std::hypot(s.length, s.width);
}

// Calls fn(row, col) for every pixel whose centre lies inside the object.
template <class Fn>
void for_each_pixel(const Workspace& ws, const ObjectInstance& o, Fn&& fn) {
    const double r = bounding_radius(o.spec);
    const double p = ws.pixel_size();
    const int c0 = std::max(0, static_cast<int>(std::floor((o.x - r) / p)));
    const int c1 = std::min(ws.resolution - 1, static_cast<int>(std::floor((o.x + r) / p)));
    const int r0 = std::max(0, static_cast<int>(std::floor((o.y - r) / p)));
    const int r1 = std::min(ws.resolution - 1, static_cast<int>(std::floor((o.y + r) / p)));
    for (int row = r0; row <= r1; ++row)
        for (int col = c0; col <= c1; ++col)
            if (o.covers(ws.px_to_x(col), ws.px_to_y(row))) fn(row, col);
}

}  // namespace

const ObjectInstance* Scene::find(int uid) const {
    for (const auto& o : objects)
        if (o.uid == uid) return &o;
    return nullptr;
}

int Scene::index_of(int uid) const {
    for (std::size_t i = 0; i < objects.size(); ++i)
        if (objects[i].uid == uid) return static_cast<int>(i);
    return -1;
}

bool Scene::is_target(int uid) const { return std::find(targets.begin(), targets.end(), uid) != targets.end(); }

void Scene::settle() {
    const int res = workspace.resolution;
    std::vector<double> height(static_cast<std::size_t>(res * res), 0.0);
    for (auto& o : objects) {
        double base = 0.0;
        for_each_pixel(workspace, o, [&](int row, int col) {
            base = std::max(base, height[static_cast<std::size_t>(row * res + col)]);
        });
        o.top = base + o.spec.height;
        for_each_pixel(workspace, o, [&](int row, int col) { height[static_cast<std::size_t>(row * res + col)] = o.top; });
    }
}

void Scene::remove(int uid) {
    const int idx = index_of(uid);
    if (idx < 0) throw UsageError("remove: no object with uid " + std::to_string(uid));
    objects.erase(objects.begin() + idx);
    settle();
}

double SceneRaster::covered_fraction(int index) const {
    const auto i = static_cast<std::size_t>(index);
    if (footprint[i] == 0) return 0.0;
    return 1.0 - static_cast<double>(visible[i]) / static_cast<double>(footprint[i]);
}

SceneRaster rasterize(const Scene& scene) {
    const Workspace& ws = scene.workspace;
    SceneRaster r;
    r.resolution = ws.resolution;
    r.labels.assign(static_cast<std::size_t>(ws.resolution * ws.resolution), -1);
    r.footprint.assign(scene.objects.size(), 0);
    r.visible.assign(scene.objects.size(), 0);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        for_each_pixel(ws, scene.objects[i], [&](int row, int col) {
            ++r.footprint[i];
            r.labels[static_cast<std::size_t>(row * ws.resolution + col)] = static_cast<int>(i);
        });
    }
    for (int label : r.labels)
        if (label >= 0) ++r.visible[static_cast<std::size_t>(label)];
    return r;
}

int topmost_at(const Scene& scene, double x, double y) {
    for (int i = static_cast<int>(scene.objects.size()) - 1; i >= 0; --i)
        if (scene.objects[static_cast<std::size_t>(i)].covers(x, y)) return i;
    return -1;
}

Scene sample_scene(Rng& rng, int n_objects, const ObjectLibrary& library, const Workspace& workspace,
                   const Instruction* instruction, const SceneOptions& options) {
    if (n_objects < 0) throw ConfigError("sample_scene: negative object count");
    if (library.empty()) throw ConfigError("sample_scene: empty object library");
    Scene scene;
    scene.workspace = workspace;
    if (n_objects == 0) return scene;

    const auto pool = library.split(options.unseen_objects);
    if (pool.empty()) throw ConfigError("sample_scene: no objects in the requested split");

    std::vector<const ObjectSpec*> chosen;
    std::vector<bool> is_target;
    if (instruction) {
        std::vector<const ObjectSpec*> matching, others;
        for (const ObjectSpec* s : pool) (s->matches(instruction->keyword) ? matching : others).push_back(s);
        if (matching.empty()) throw ConfigError("sample_scene: no object matches '" + instruction->keyword + "'");
        const std::size_t wanted = is_two_target(instruction->type) ? 2 : 1;
        const std::size_t n_targets = std::min({wanted, matching.size(), static_cast<std::size_t>(n_objects)});
        std::shuffle(matching.begin(), matching.end(), rng);
        for (std::size_t i = 0; i < n_targets; ++i) {
            chosen.push_back(matching[i]);
            is_target.push_back(true);
        }
        if (static_cast<std::size_t>(n_objects) > n_targets && others.empty())
            throw ConfigError("sample_scene: every object matches '" + instruction->keyword + "'");
        while (chosen.size() < static_cast<std::size_t>(n_objects)) {
            chosen.push_back(others[uniform_index(rng, others.size())]);
            is_target.push_back(false);
        }
    } else {
        for (int i = 0; i < n_objects; ++i) {
            chosen.push_back(pool[uniform_index(rng, pool.size())]);
            is_target.push_back(false);
        }
    }

    std::vector<std::size_t> order(chosen.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options.targets_at_bottom) {
        auto first_other = std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return is_target[i]; });
        std::shuffle(first_other, order.end(), rng);
    } else {
        std::shuffle(order.begin(), order.end(), rng);
    }

    const double side = workspace.side;
    double cx = 0.5 * side, cy = 0.5 * side;
    if (options.layout == Layout::cluttered) {
        const double lo = options.margin + options.cluster_radius;
        const double hi = side - lo;
        std::uniform_real_distribution<double> u(std::min(lo, hi), std::max(lo, hi));
        cx = u(rng);
        cy = u(rng);
    }

    const int res = workspace.resolution;
    std::vector<char> occupied(static_cast<std::size_t>(res * res), 0);
    std::uniform_real_distribution<double> yaw_dist(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> free_dist(options.margin, side - options.margin);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int uid = 0;
    for (std::size_t idx : order) {
        ObjectInstance inst;
        inst.uid = uid++;
        inst.spec = *chosen[idx];
        const double reach = bounding_radius(inst.spec);
        bool placed = false;
        for (int attempt = 0; attempt < options.max_retries && !placed; ++attempt) {
            inst.yaw = yaw_dist(rng);
            if (options.layout == Layout::scattered) {
                inst.x = free_dist(rng);
                inst.y = free_dist(rng);
            } else {
                // the disc widens as retries run out so crowded piles still fit
                const double grow = 1.0 + 2.0 * attempt / options.max_retries;
                const double rad = grow * options.cluster_radius * std::sqrt(unit(rng));
                const double ang = 2.0 * std::numbers::pi * unit(rng);
                inst.x = cx + rad * std::cos(ang);
                inst.y = cy + rad * std::sin(ang);
            }
            if (inst.x - reach < 0 || inst.y - reach < 0 || inst.x + reach > side || inst.y + reach > side) continue;
            int total = 0, overlap = 0;
            for_each_pixel(workspace, inst, [&](int row, int col) {
                ++total;
                overlap += occupied[static_cast<std::size_t>(row * res + col)];
            });
            if (total == 0) continue;
            const double limit = options.layout == Layout::scattered ? 0.0 : options.max_overlap;
            if (static_cast<double>(overlap) / total > limit) continue;
            placed = true;
        }
        if (!placed)
            throw PlacementError("sample_scene: could not place '" + inst.spec.label + "' after " +
                                 std::to_string(options.max_retries) + " tries");
        for_each_pixel(workspace, inst, [&](int row, int col) { occupied[static_cast<std::size_t>(row * res + col)] = 1; });
        if (is_target[idx]) scene.targets.push_back(inst.uid);
        scene.objects.push_back(std::move(inst));
    }
    std::sort(scene.targets.begin(), scene.targets.end());
    scene.settle();
    return scene;
}

}  // namespace vlg::sim
