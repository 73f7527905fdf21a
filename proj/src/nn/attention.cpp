#include "vlg/nn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "vlg/common/errors.hpp"

namespace vlg::nn {

void AttentionConfig::validate() const {
    if (width <= 0 || heads <= 0 || layers <= 0 || ffn_ratio <= 0)
        throw ConfigError("attention: width, heads, layers and ffn_ratio must be positive");
    if (width % heads != 0)
        throw ConfigError("attention: width " + std::to_string(width) + " not divisible by " +
                          std::to_string(heads) + " heads");
}

AttentionLayer::AttentionLayer(const std::string& name, const AttentionConfig& cfg)
    : ln_query(name + ".ln_query", cfg.width),
      q_proj(name + ".q_proj", cfg.width, cfg.width),
      k_proj(name + ".k_proj", cfg.width, cfg.width),
      v_proj(name + ".v_proj", cfg.width, cfg.width),
      out_proj(name + ".out_proj", cfg.width, cfg.width),
      ln_ffn(name + ".ln_ffn", cfg.width),
      ffn_in(name + ".ffn_in", cfg.width, cfg.width * cfg.ffn_ratio),
      ffn_out(name + ".ffn_out", cfg.width * cfg.ffn_ratio, cfg.width) {}

void AttentionLayer::init(Rng& rng) {
    q_proj.init(rng);
    k_proj.init(rng);
    v_proj.init(rng);
    out_proj.init(rng);
    ffn_in.init(rng);
    ffn_out.init(rng);
}

void AttentionLayer::collect(ParameterList& out) {
    ln_query.collect(out);
    q_proj.collect(out);
    k_proj.collect(out);
    v_proj.collect(out);
    out_proj.collect(out);
    ln_ffn.collect(out);
    ffn_in.collect(out);
    ffn_out.collect(out);
}

std::vector<double> AttentionWeights::max_per_key() const {
    if (per_head.empty()) return {};
    std::vector<double> out(static_cast<std::size_t>(per_head.front().cols()), 0.0);
    for (const Tensor2& w : per_head)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            out[static_cast<std::size_t>(j)] = std::max(out[static_cast<std::size_t>(j)], w.col(j).maxCoeff());
    return out;
}

AttentionParams::AttentionParams(const std::string& name, const AttentionConfig& cfg) : config(cfg) {
    cfg.validate();
    for (int i = 0; i < cfg.layers; ++i) layers.emplace_back(name + "." + std::to_string(i), cfg);
}

void AttentionParams::init(Rng& rng) {
    for (auto& l : layers) l.init(rng);
}

void AttentionParams::collect(ParameterList& out) {
    for (auto& l : layers) l.collect(out);
}

Var multi_head_core(Tape& tape, Var q, Var k, Var v, int heads, bool scale, AttentionWeights* weights) {
    const Eigen::Index width = tape.value(q).cols();
    if (tape.value(k).rows() == 0) throw ConfigError("cross attention: no keys (N = 0)");
    if (tape.value(q).rows() == 0) throw ConfigError("cross attention: no queries (K = 0)");
    if (tape.value(k).cols() != width || tape.value(v).cols() != width)
        throw ConfigError("cross attention: query/key/value widths differ");
    if (tape.value(k).rows() != tape.value(v).rows())
        throw ConfigError("cross attention: key and value counts differ");
    if (heads <= 0 || width % heads != 0) throw ConfigError("cross attention: bad head count");
    const Eigen::Index dh = width / heads;
    const double factor = scale ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;

    if (weights) weights->per_head.clear();
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = tape.slice_cols(q, h * dh, dh);
        Var kh = tape.slice_cols(k, h * dh, dh);
        Var vh = tape.slice_cols(v, h * dh, dh);
        Var scores = tape.matmul_bt(qh, kh);
        if (scale) scores = tape.scale(scores, factor);
        Var attn = tape.softmax_rows(scores);
        if (weights) weights->per_head.push_back(tape.value(attn));
        outs.push_back(tape.matmul(attn, vh));
    }
    return heads == 1 ? outs.front() : tape.concat_cols(outs);
}

Var cross_attention_forward(Tape& tape, AttentionParams& params, Var queries, Var keys, Var values,
                            AttentionWeights* weights) {
    const AttentionConfig& cfg = params.config;
    if (tape.value(queries).cols() != cfg.width)
        throw ConfigError("cross attention: query width " + std::to_string(tape.value(queries).cols()) +
                          " != " + std::to_string(cfg.width));
    Var x = queries;
    for (auto& layer : params.layers) {
        Var q = layer.q_proj.forward(tape, layer.ln_query.forward(tape, x));
        Var k = layer.k_proj.forward(tape, keys);
        Var v = layer.v_proj.forward(tape, values);
        Var mixed = multi_head_core(tape, q, k, v, cfg.heads, cfg.scale, weights);
        Var h = tape.add(x, layer.out_proj.forward(tape, mixed));
        Var ff = layer.ffn_out.forward(tape, tape.relu(layer.ffn_in.forward(tape, layer.ln_ffn.forward(tape, h))));
        x = tape.add(h, ff);
    }
    return x;
}

}  // namespace vlg::nn
