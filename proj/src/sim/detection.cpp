#include "vlg/sim/detection.hpp"

#include <map>

namespace vlg::sim {

std::vector<ObjectBox> detect_boxes(const Scene& scene) { return detect_boxes(scene, rasterize(scene)); }

std::vector<ObjectBox> detect_boxes(const Scene& scene, const SceneRaster& raster) {
    const int res = raster.resolution;
    const Workspace& ws = scene.workspace;
    std::vector<char> seen(raster.labels.size(), 0);
    std::vector<int> stack;
    std::vector<ObjectBox> boxes;

    // Scan in object order so the output order is stable.
    std::vector<std::vector<int>> seeds(scene.objects.size());
    for (int i = 0; i < res * res; ++i)
        if (raster.labels[static_cast<std::size_t>(i)] >= 0) seeds[static_cast<std::size_t>(raster.labels[static_cast<std::size_t>(i)])].push_back(i);

    for (std::size_t obj = 0; obj < scene.objects.size(); ++obj) {
        for (int start : seeds[obj]) {
            if (seen[static_cast<std::size_t>(start)]) continue;
            PixelRect rect{res, res, -1, -1};
            stack.assign(1, start);
            seen[static_cast<std::size_t>(start)] = 1;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int row = p / res, col = p % res;
                rect.x0 = std::min(rect.x0, col);
                rect.x1 = std::max(rect.x1, col);
                rect.y0 = std::min(rect.y0, row);
                rect.y1 = std::max(rect.y1, row);
                const int nbrs[4][2] = {{row - 1, col}, {row + 1, col}, {row, col - 1}, {row, col + 1}};
                for (const auto& n : nbrs) {
                    if (n[0] < 0 || n[1] < 0 || n[0] >= res || n[1] >= res) continue;
                    const int q = n[0] * res + n[1];
                    if (!seen[static_cast<std::size_t>(q)] && raster.labels[static_cast<std::size_t>(q)] == static_cast<int>(obj)) {
                        seen[static_cast<std::size_t>(q)] = 1;
                        stack.push_back(q);
                    }
                }
            }
            if (rect.width() < kMinBoxSide || rect.height() < kMinBoxSide) continue;

            std::map<int, int> counts;  // object index → visible pixels inside the rectangle
            int total = 0;
            for (int row = rect.y0; row <= rect.y1; ++row)
                for (int col = rect.x0; col <= rect.x1; ++col)
                    if (int l = raster.at(row, col); l >= 0) {
                        ++counts[l];
                        ++total;
                    }
            int dominant = static_cast<int>(obj);
            for (const auto& [idx, c] : counts)
                if (c > counts[dominant]) dominant = idx;

            std::map<std::string, double> mix;
            for (const auto& [idx, c] : counts) {
                const double w = static_cast<double>(c) / total;
                for (const auto& [concept_name, a] : scene.objects[static_cast<std::size_t>(idx)].spec.attributes())
                    mix[concept_name] += w * a;
            }

            ObjectBox box;
            box.rect = rect;
            box.center = {ws.px_to_x(0.5 * (rect.x0 + rect.x1)), ws.px_to_y(0.5 * (rect.y0 + rect.y1)),
                          scene.objects[static_cast<std::size_t>(dominant)].top};
            box.descriptor.assign(mix.begin(), mix.end());
            box.dominant_uid = scene.objects[static_cast<std::size_t>(dominant)].uid;
            boxes.push_back(std::move(box));
        }
    }
    return boxes;
}

}  // namespace vlg::sim
