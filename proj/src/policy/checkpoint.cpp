#include "vlg/policy/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vlg/common/errors.hpp"

namespace vlg::policy {

void Checkpoint::add_params(const std::string& prefix, const nn::ParameterList& params) {
    for (const auto* p : params) add(prefix + p->name, p->value);
}

void Checkpoint::add_adam(const std::string& prefix, const nn::AdamState& state) {
    header[prefix + "step"] = state.step;
    for (std::size_t i = 0; i < state.first.size(); ++i) {
        add(prefix + "m." + std::to_string(i), state.first[i]);
        add(prefix + "v." + std::to_string(i), state.second[i]);
    }
}

const nn::Tensor2& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw ConfigError("checkpoint: no tensor named '" + name + "'");
}

void Checkpoint::restore_params(const std::string& prefix, const nn::ParameterList& params) const {
    for (auto* p : params) {
        const auto& t = tensor(prefix + p->name);
        if (t.rows() != p->value.rows() || t.cols() != p->value.cols())
            throw ConfigError("checkpoint: tensor '" + p->name + "' is " + std::to_string(t.rows()) + "x" +
                              std::to_string(t.cols()) + ", model expects " + std::to_string(p->value.rows()) + "x" +
                              std::to_string(p->value.cols()));
        p->value = t;
    }
}

void Checkpoint::restore_adam(const std::string& prefix, nn::AdamState& state) const {
    state.step = header.at(prefix + "step").get<std::int64_t>();
    for (std::size_t i = 0; i < state.first.size(); ++i) {
        state.first[i] = tensor(prefix + "m." + std::to_string(i));
        state.second[i] = tensor(prefix + "v." + std::to_string(i));
    }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json header = ckpt.header;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors) manifest.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    header["tensors"] = manifest;
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
        out.write(kCheckpointMagic, sizeof kCheckpointMagic);
        const std::uint32_t version = kCheckpointVersion;
        const std::uint64_t len = text.size();
        out.write(reinterpret_cast<const char*>(&version), sizeof version);
        out.write(reinterpret_cast<const char*>(&len), sizeof len);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& [_, t] : ckpt.tensors)
            out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open " + path.string());
    char magic[sizeof kCheckpointMagic]{};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw ConfigError("checkpoint: " + path.string() + " is not a checkpoint (bad magic)");
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || version != kCheckpointVersion)
        throw ConfigError("checkpoint: unsupported version " + std::to_string(version) + " in " + path.string());
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw ConfigError("checkpoint: truncated header in " + path.string());

    Checkpoint ckpt;
    ckpt.header = nlohmann::json::parse(text);
    for (const auto& entry : ckpt.header.at("tensors")) {
        nn::Tensor2 t(entry.at("rows").get<Eigen::Index>(), entry.at("cols").get<Eigen::Index>());
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw ConfigError("checkpoint: truncated tensor data in " + path.string());
        ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
    }
    ckpt.header.erase("tensors");
    return ckpt;
}

}  // namespace vlg::policy
