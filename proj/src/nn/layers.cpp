#include "vlg/nn/layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vlg/common/errors.hpp"

namespace vlg::nn {

Linear::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", out, in), bias(name + ".bias", 1, out) {
    if (in <= 0 || out <= 0) throw ConfigError("Linear " + name + ": widths must be positive");
}

void Linear::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < bias.value.size(); ++i) bias.value.data()[i] = u(rng);
}

Var Linear::forward(Tape& tape, Var x) {
    if (tape.value(x).cols() != in())
        throw ConfigError(weight.name + ": input width " + std::to_string(tape.value(x).cols()) +
                          " != " + std::to_string(in()));
    return tape.add_row(tape.matmul_bt(x, tape.leaf(weight)), tape.leaf(bias));
}

void Linear::collect(ParameterList& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

Mlp::Mlp(const std::string& name, const std::vector<int>& widths) {
    if (widths.size() < 2) throw ConfigError("Mlp " + name + ": needs at least in and out widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        layers.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1]);
}

int Mlp::in() const { return layers.empty() ? 0 : layers.front().in(); }
int Mlp::out() const { return layers.empty() ? 0 : layers.back().out(); }

void Mlp::init(Rng& rng) {
    for (auto& l : layers) l.init(rng);
}

Var Mlp::forward(Tape& tape, Var x) { return mlp_forward(tape, layers, x); }

void Mlp::collect(ParameterList& out) {
    for (auto& l : layers) l.collect(out);
}

Var mlp_forward(Tape& tape, std::span<Linear> layers, Var x, Activation act) {
    if (layers.empty()) throw ConfigError("mlp_forward: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = layers[i].forward(tape, x);
        if (i + 1 < layers.size() && act == Activation::relu) x = tape.relu(x);
    }
    return x;
}

LayerNorm::LayerNorm(const std::string& name, int width)
    : scale(name + ".scale", 1, width), shift(name + ".shift", 1, width) {
    scale.value.setOnes();
}

Var LayerNorm::forward(Tape& tape, Var x) {
    return tape.layer_norm_rows(x, tape.leaf(scale), tape.leaf(shift));
}

void LayerNorm::collect(ParameterList& out) {
    out.push_back(&scale);
    out.push_back(&shift);
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("softmax: empty input");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> positional_encoding(const std::array<double, 3>& p, int bands) {
    if (bands < 0) throw ConfigError("positional_encoding: negative band count");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(6 * bands));
    for (double coord : p) {
        for (int l = 0; l < bands; ++l) {
            const double arg = std::ldexp(1.0, l) * std::numbers::pi * coord;
            out.push_back(std::sin(arg));
            out.push_back(std::cos(arg));
        }
    }
    return out;
}

}  // namespace vlg::nn
