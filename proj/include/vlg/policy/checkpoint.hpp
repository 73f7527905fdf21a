#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vlg/nn/adam.hpp"
#include "vlg/nn/tensor.hpp"

namespace vlg::policy {

inline constexpr char kCheckpointMagic[8] = {'V', 'L', 'G', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: 8-byte magic, u32 version, u64 header length, JSON header,
// then every tensor's doubles in manifest order (little-endian host order).
// The header carries a "tensors" manifest of {name, rows, cols}.
struct Checkpoint {
    nlohmann::json header = nlohmann::json::object();
    std::vector<std::pair<std::string, nn::Tensor2>> tensors;

    void add(const std::string& name, const nn::Tensor2& t) { tensors.emplace_back(name, t); }
    void add_params(const std::string& prefix, const nn::ParameterList& params);
    void add_adam(const std::string& prefix, const nn::AdamState& state);

    const nn::Tensor2& tensor(const std::string& name) const;
    // Copies tensors back by name; shapes must match.
    void restore_params(const std::string& prefix, const nn::ParameterList& params) const;
    void restore_adam(const std::string& prefix, nn::AdamState& state) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace vlg::policy
