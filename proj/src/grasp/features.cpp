#include "vlg/grasp/features.hpp"

#include "vlg/common/errors.hpp"

namespace vlg::grasp {

GraspEncoder::GraspEncoder(const std::string& name, int bands_, int width)
    : bands(bands_), mlp(name, {input_width(bands_), width, width}) {
    if (bands_ < 1) throw ConfigError("grasp encoder: bands must be at least 1");
}

nn::Tensor2 GraspEncoder::serialize(const std::vector<GraspPose>& grasps) const {
    nn::Tensor2 out(static_cast<Eigen::Index>(grasps.size()), input_width(bands));
    for (std::size_t k = 0; k < grasps.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        const auto e = nn::positional_encoding(grasps[k].position, bands);
        for (std::size_t c = 0; c < e.size(); ++c) out(r, static_cast<Eigen::Index>(c)) = e[c];
        const auto base = static_cast<Eigen::Index>(e.size());
        out(r, base) = grasps[k].yaw;
        out(r, base + 1) = grasps[k].width;
        out(r, base + 2) = grasps[k].quality;
    }
    return out;
}

nn::Var GraspEncoder::forward(nn::Tape& tape, const std::vector<GraspPose>& grasps) {
    if (grasps.empty()) throw ConfigError("grasp encoder: no grasps (K = 0)");
    return mlp.forward(tape, tape.constant(serialize(grasps)));
}

nn::Var grasp_feature_encode(nn::Tape& tape, const std::vector<GraspPose>& grasps, GraspEncoder& encoder) {
    return encoder.forward(tape, grasps);
}

}  // namespace vlg::grasp
