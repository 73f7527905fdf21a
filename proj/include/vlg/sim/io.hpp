#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "vlg/sim/episode.hpp"

namespace vlg::sim {

inline constexpr int kSceneFormatVersion = 1;

nlohmann::json spec_to_json(const ObjectSpec& spec);
ObjectSpec spec_from_json(const nlohmann::json& j);

// {"format": "vlg.scene", "version": 1, ...}; objects listed in stacking order.
nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

nlohmann::json instruction_to_json(const Instruction& instruction);
Instruction instruction_from_json(const nlohmann::json& j);

nlohmann::json grasp_to_json(const grasp::GraspPose& g);
grasp::GraspPose grasp_from_json(const nlohmann::json& j);

nlohmann::json box_to_json(const ObjectBox& box);
nlohmann::json observation_to_json(const Observation& obs);

// Scene, instruction and current observation of an episode.
nlohmann::json episode_to_json(const Episode& episode);

// Top-down colour render with detected boxes outlined, targets starred and
// an optional highlighted grasp. Writes an 8-bit RGB PNG.
struct RenderOptions {
    int scale = 2;
    const std::vector<ObjectBox>* boxes = nullptr;
    const std::vector<grasp::GraspPose>* grasps = nullptr;
    int highlight_grasp = -1;
};

std::vector<unsigned char> render_rgb(const Scene& scene, const RenderOptions& options, int& width, int& height);
void write_png(const std::filesystem::path& path, const std::vector<unsigned char>& rgb, int width, int height);
void render_png(const std::filesystem::path& path, const Scene& scene, const RenderOptions& options = {});

}  // namespace vlg::sim
