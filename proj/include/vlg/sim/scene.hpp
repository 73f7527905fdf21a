#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "vlg/common/random.hpp"
#include "vlg/sim/instruction.hpp"
#include "vlg/sim/library.hpp"

namespace vlg::sim {

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Square table with its origin at a corner, viewed top-down by a
// resolution×resolution camera. Pixel (row, col) covers y ∈ [row·p, (row+1)·p).
struct Workspace {
    double side = 0.8;
    int resolution = 224;

    double pixel_size() const { return side / resolution; }
    double dist_max() const { return side * std::sqrt(2.0); }
    bool contains(double x, double y) const { return x >= 0 && y >= 0 && x <= side && y <= side; }
    // Pixel-centre coordinates.
    double px_to_x(double col) const { return (col + 0.5) * pixel_size(); }
    double px_to_y(double row) const { return (row + 0.5) * pixel_size(); }
};

struct ObjectInstance {
    int uid = 0;
    ObjectSpec spec;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double top = 0.0;  // height of the upper surface after settling on lower objects

    bool covers(double px, double py) const;
    Vec3 position() const { return {x, y, top}; }
};

// objects are in stacking order: later entries rest on top of earlier ones.
struct Scene {
    Workspace workspace;
    std::vector<ObjectInstance> objects;
    std::vector<int> targets;  // uids
    std::uint64_t seed = 0;

    const ObjectInstance* find(int uid) const;
    int index_of(int uid) const;
    bool is_target(int uid) const;
    // Recomputes every top height by dropping objects in stacking order.
    void settle();
    void remove(int uid);
};

// Top-down label image plus per-object pixel statistics.
struct SceneRaster {
    int resolution = 0;
    std::vector<int> labels;         // object index per pixel, −1 for table
    std::vector<int> footprint;      // pixels inside each object's outline
    std::vector<int> visible;        // pixels where each object is the topmost

    int at(int row, int col) const { return labels[static_cast<std::size_t>(row * resolution + col)]; }
    // Fraction of an object's footprint hidden under higher objects.
    double covered_fraction(int index) const;
};

SceneRaster rasterize(const Scene& scene);

// Index of the topmost object covering a world point, or −1.
int topmost_at(const Scene& scene, double x, double y);

enum class Layout { scattered, cluttered };

struct SceneOptions {
    Layout layout = Layout::scattered;
    double margin = 0.08;
    double cluster_radius = 0.13;
    // Largest fraction of a new object's footprint that may overlap objects below it.
    double max_overlap = 0.55;
    int max_retries = 400;
    bool targets_at_bottom = false;
    bool unseen_objects = false;
};

// Places n objects by rejection sampling. With an instruction, one target (two
// for general-label and function keywords) is drawn from objects matching the
// keyword and the rest from objects that do not. Throws PlacementError when an
// object cannot be placed within max_retries.
Scene sample_scene(Rng& rng, int n_objects, const ObjectLibrary& library, const Workspace& workspace,
                   const Instruction* instruction, const SceneOptions& options = {});

}  // namespace vlg::sim
