#pragma once

#include <vector>

#include "vlg/common/random.hpp"
#include "vlg/sim/detection.hpp"
#include "vlg/sim/scene.hpp"

namespace vlg::grasp {

using sim::Vec3;

// Top-down 4-DoF grasp.
struct GraspPose {
    Vec3 position{};
    double yaw = 0.0;
    double width = 0.0;
    double quality = 0.0;

    bool operator==(const GraspPose&) const = default;
};

struct ProposalConfig {
    int k_max = 30;
    double position_jitter = 0.01;
    double quality_jitter = 0.05;
    int min_visible_pixels = 20;
    double gripper_max_width = 0.085;
    double candidate_offset = 0.015;

    static ProposalConfig noiseless() { return {.position_jitter = 0.0, .quality_jitter = 0.0}; }
};

// Quality from how far the object's narrow extent is from the gripper opening:
// 1 up to 7 cm, 0.1 from 11 cm, linear between.
double width_quality(double extent);

// Up to three grasps per visible object around the centroid of its visible
// pixels, each placed on a pixel where that object is on top. Sorted by
// quality (descending) and truncated to k_max.
std::vector<GraspPose> propose_grasps(const sim::Scene& scene, const ProposalConfig& config, Rng& rng);
std::vector<GraspPose> propose_grasps(const sim::Scene& scene, const sim::SceneRaster& raster,
                                      const ProposalConfig& config, Rng& rng);

// Dense N×K 0/1 matrix; entry (i, k) is 1 iff ‖box_i.center − grasp_k.position‖ < threshold.
struct MappingMatrix {
    int rows = 0;
    int cols = 0;
    double threshold = 0.05;
    std::vector<unsigned char> data;

    bool at(int box, int grasp) const { return data[static_cast<std::size_t>(box * cols + grasp)] != 0; }
    std::vector<int> grasps_of(int box) const;
};

inline constexpr double kMappingThreshold = 0.05;
inline constexpr double kPriorFloor = 1e-6;

MappingMatrix box_grasp_mapping(const std::vector<sim::ObjectBox>& boxes, const std::vector<GraspPose>& grasps,
                                double threshold = kMappingThreshold);

// raw_k = Σ_i p_i·M(i,k), plus a floor on every entry, renormalised.
std::vector<double> grounding_prior(const std::vector<double>& box_probs, const MappingMatrix& mapping,
                                    double floor = kPriorFloor);

}  // namespace vlg::grasp
