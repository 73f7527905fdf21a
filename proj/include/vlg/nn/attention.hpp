#pragma once

#include <vector>

#include "vlg/nn/layers.hpp"

namespace vlg::nn {

struct AttentionConfig {
    int width = 512;
    int heads = 8;
    int layers = 1;
    int ffn_ratio = 4;
    // Divide scores by √(width/heads). false evaluates softmax(QKᵀ)V literally.
    bool scale = true;

    void validate() const;
};

// One pre-norm cross-attention block:
//   h   = q + Wo·MHA(LN₁(q), k, v)
//   out = h + FFN(LN₂(h))
struct AttentionLayer {
    LayerNorm ln_query;
    Linear q_proj, k_proj, v_proj, out_proj;
    LayerNorm ln_ffn;
    Linear ffn_in, ffn_out;

    AttentionLayer(const std::string& name, const AttentionConfig& cfg);
    void init(Rng& rng);
    void collect(ParameterList& out);
};

// Per-head softmax weights from the last forward, one K×N matrix per head.
struct AttentionWeights {
    std::vector<Tensor2> per_head;

    // For each key, the max weight over heads and queries.
    std::vector<double> max_per_key() const;
};

struct AttentionParams {
    AttentionConfig config;
    std::vector<AttentionLayer> layers;

    AttentionParams() = default;
    AttentionParams(const std::string& name, const AttentionConfig& cfg);
    void init(Rng& rng);
    void collect(ParameterList& out);
};

// Multi-head attention core without residual/FFN: concat_h softmax(Q_h K_hᵀ·s) V_h,
// where Q, K, V are already projected. Exposed for direct-formula tests.
Var multi_head_core(Tape& tape, Var q, Var k, Var v, int heads, bool scale,
                    AttentionWeights* weights = nullptr);

// queries: K×width, keys/values: N×width → K×width.
Var cross_attention_forward(Tape& tape, AttentionParams& params, Var queries, Var keys, Var values,
                            AttentionWeights* weights = nullptr);

}  // namespace vlg::nn
