#pragma once

#include <string>
#include <vector>

#include "vlg/grasp/grasp.hpp"
#include "vlg/nn/layers.hpp"

namespace vlg::grasp {

// Grasp pose → feature row: (positional_encoding(position), yaw, width, quality)
// through an MLP to the model width.
struct GraspEncoder {
    int bands = 6;
    nn::Mlp mlp;

    GraspEncoder() = default;
    GraspEncoder(const std::string& name, int bands, int width);

    static int input_width(int bands) { return 6 * bands + 3; }
    void init(Rng& rng) { mlp.init(rng); }
    void collect(nn::ParameterList& out) { mlp.collect(out); }

    nn::Tensor2 serialize(const std::vector<GraspPose>& grasps) const;  // K×(6L+3)
    nn::Var forward(nn::Tape& tape, const std::vector<GraspPose>& grasps);
};

// K×width grasp features; K ≥ 1.
nn::Var grasp_feature_encode(nn::Tape& tape, const std::vector<GraspPose>& grasps, GraspEncoder& encoder);

}  // namespace vlg::grasp
