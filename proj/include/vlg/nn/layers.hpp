#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vlg/common/random.hpp"
#include "vlg/nn/tape.hpp"

namespace vlg::nn {

// y = x·Wᵀ + b for each row x. weight is out×in, bias is 1×out.
struct Linear {
    Parameter weight;
    Parameter bias;

    Linear() = default;
    Linear(const std::string& name, int in, int out);

    int in() const { return static_cast<int>(weight.value.cols()); }
    int out() const { return static_cast<int>(weight.value.rows()); }

    // uniform(−1/√fan_in, 1/√fan_in) for weight and bias.
    void init(Rng& rng);
    Var forward(Tape& tape, Var x);
    void collect(ParameterList& out);
};

enum class Activation { relu };

// ReLU between layers, none after the last.
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    // widths = {in, hidden..., out}
    Mlp(const std::string& name, const std::vector<int>& widths);

    int in() const;
    int out() const;
    void init(Rng& rng);
    Var forward(Tape& tape, Var x);
    void collect(ParameterList& out);
};

Var mlp_forward(Tape& tape, std::span<Linear> layers, Var x, Activation act = Activation::relu);

struct LayerNorm {
    Parameter scale;
    Parameter shift;

    LayerNorm() = default;
    LayerNorm(const std::string& name, int width);

    Var forward(Tape& tape, Var x);
    void collect(ParameterList& out);
};

// Numerically stable softmax of a plain vector. Throws on empty input.
std::vector<double> softmax(std::span<const double> logits);

// NeRF-style encoding: for each axis i and band l, (sin(2^l π p_i), cos(2^l π p_i)).
// Axis-major ordering, length 6·bands.
std::vector<double> positional_encoding(const std::array<double, 3>& p, int bands);

}  // namespace vlg::nn
