#pragma once

#include <vector>

#include "vlg/sim/scene.hpp"

namespace vlg::sim {

// Inclusive pixel rectangle in the top-down render.
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    bool operator==(const PixelRect&) const = default;
};

struct ObjectBox {
    PixelRect rect;
    Vec3 center{};            // world position of the rectangle centre; z from the dominant object
    AttributeMix descriptor;  // visible-pixel-weighted blend of every object inside the rectangle
    int dominant_uid = -1;    // object with most visible pixels in the rectangle (not seen by the policy)
};

inline constexpr int kMinBoxSide = 15;

// One box per 4-connected region of each object's visible pixels. Boxes with
// either side under 15 px are dropped, so a fully hidden object or a thin
// sliver yields nothing.
std::vector<ObjectBox> detect_boxes(const Scene& scene);
std::vector<ObjectBox> detect_boxes(const Scene& scene, const SceneRaster& raster);

}  // namespace vlg::sim
