#include "vlg/grasp/grasp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vlg/common/errors.hpp"

namespace vlg::grasp {

double width_quality(double extent) {
    constexpr double easy = 0.07, hard = 0.11;
    if (extent <= easy) return 1.0;
    if (extent >= hard) return 0.1;
    return 1.0 - 0.9 * (extent - easy) / (hard - easy);
}

std::vector<GraspPose> propose_grasps(const sim::Scene& scene, const ProposalConfig& config, Rng& rng) {
    return propose_grasps(scene, sim::rasterize(scene), config, rng);
}

std::vector<GraspPose> propose_grasps(const sim::Scene& scene, const sim::SceneRaster& raster,
                                      const ProposalConfig& config, Rng& rng) {
    if (config.k_max < 1) throw ConfigError("propose_grasps: k_max must be at least 1");
    const sim::Workspace& ws = scene.workspace;
    const int res = raster.resolution;
    const std::size_t n = scene.objects.size();

    std::vector<double> sx(n, 0.0), sy(n, 0.0);
    for (int row = 0; row < res; ++row)
        for (int col = 0; col < res; ++col)
            if (int l = raster.at(row, col); l >= 0) {
                sx[static_cast<std::size_t>(l)] += ws.px_to_x(col);
                sy[static_cast<std::size_t>(l)] += ws.px_to_y(row);
            }

    auto visible_at = [&](int idx, double x, double y) {
        if (!ws.contains(x, y)) return false;
        const int col = std::clamp(static_cast<int>(x / ws.pixel_size()), 0, res - 1);
        const int row = std::clamp(static_cast<int>(y / ws.pixel_size()), 0, res - 1);
        return raster.at(row, col) == idx;
    };

    std::normal_distribution<double> pos_noise(0.0, 1.0), q_noise(0.0, 1.0);
    std::vector<GraspPose> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int vis = raster.visible[i];
        if (vis < config.min_visible_pixels) continue;
        const auto& o = scene.objects[i];
        const int idx = static_cast<int>(i);
        const double cx = sx[i] / vis, cy = sy[i] / vis;
        const double ux = std::cos(o.yaw), uy = std::sin(o.yaw);

        std::vector<std::array<double, 2>> spots;
        for (double off : {0.0, config.candidate_offset, -config.candidate_offset}) {
            const double x = cx + off * ux, y = cy + off * uy;
            if (visible_at(idx, x, y)) spots.push_back({x, y});
        }
        if (spots.empty()) {
            // centroid is hidden: fall back to the visible pixel nearest to it
            double best = 1e18;
            std::array<double, 2> spot{cx, cy};
            for (int row = 0; row < res; ++row)
                for (int col = 0; col < res; ++col)
                    if (raster.at(row, col) == idx) {
                        const double x = ws.px_to_x(col), y = ws.px_to_y(row);
                        const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                        if (d < best) best = d, spot = {x, y};
                    }
            spots.push_back(spot);
        }

        const double extent = o.spec.grasp_extent();
        const double base_quality = width_quality(extent);
        double yaw = o.yaw + 0.5 * std::numbers::pi;
        while (yaw > 0.5 * std::numbers::pi) yaw -= std::numbers::pi;
        for (const auto& s : spots) {
            GraspPose g;
            g.position = {std::clamp(s[0] + config.position_jitter * pos_noise(rng), 0.0, ws.side),
                          std::clamp(s[1] + config.position_jitter * pos_noise(rng), 0.0, ws.side), o.top};
            g.yaw = yaw;
            g.width = std::min(extent + 0.01, config.gripper_max_width);
            g.quality = std::clamp(base_quality + config.quality_jitter * q_noise(rng), 0.0, 1.0);
            out.push_back(g);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const GraspPose& a, const GraspPose& b) { return a.quality > b.quality; });
    if (out.size() > static_cast<std::size_t>(config.k_max)) out.resize(static_cast<std::size_t>(config.k_max));
    return out;
}

std::vector<int> MappingMatrix::grasps_of(int box) const {
    std::vector<int> out;
    for (int k = 0; k < cols; ++k)
        if (at(box, k)) out.push_back(k);
    return out;
}

MappingMatrix box_grasp_mapping(const std::vector<sim::ObjectBox>& boxes, const std::vector<GraspPose>& grasps,
                                double threshold) {
    if (!(threshold > 0.0)) throw ConfigError("box_grasp_mapping: threshold must be positive");
    MappingMatrix m;
    m.rows = static_cast<int>(boxes.size());
    m.cols = static_cast<int>(grasps.size());
    m.threshold = threshold;
    m.data.assign(boxes.size() * grasps.size(), 0);
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t k = 0; k < grasps.size(); ++k)
            m.data[i * grasps.size() + k] = sim::distance(boxes[i].center, grasps[k].position) < threshold ? 1 : 0;
    return m;
}

std::vector<double> grounding_prior(const std::vector<double>& box_probs, const MappingMatrix& mapping, double floor) {
    if (mapping.cols == 0) throw ConfigError("grounding_prior: no grasps (K = 0)");
    if (static_cast<int>(box_probs.size()) != mapping.rows)
        throw ConfigError("grounding_prior: " + std::to_string(box_probs.size()) + " box probabilities for " +
                          std::to_string(mapping.rows) + " mapping rows");
    std::vector<double> prior(static_cast<std::size_t>(mapping.cols), floor);
    for (int i = 0; i < mapping.rows; ++i)
        for (int k = 0; k < mapping.cols; ++k)
            if (mapping.at(i, k)) prior[static_cast<std::size_t>(k)] += box_probs[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (double p : prior) total += p;
    for (double& p : prior) p /= total;
    return prior;
}

}  // namespace vlg::grasp
