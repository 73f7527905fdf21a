#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlg/nn/layers.hpp"
#include "vlg/sim/detection.hpp"
#include "vlg/sim/instruction.hpp"

namespace vlg::encoder {

using nn::Tensor2;

inline constexpr double kTemplatePerturbation = 0.05;
inline constexpr double kGeneralShare = 0.8;
inline constexpr double kGroundingTemperature = 0.07;

struct EncoderConfig {
    int width = 512;
    std::uint64_t basis_seed = 20240601;
    double sigma_align = 0.0;
};

// Unit vectors for every concept of a vocabulary in a shared text/image space.
//
// Each concept starts from an independent direction (orthonormal when the
// vocabulary fits the width). A label additionally leans towards its general
// labels: label = normalize(e_label + 0.8·Σ e_general), so "banana" sits close
// to "fruit" and far from "red".
class ConceptBasis {
public:
    ConceptBasis() = default;
    ConceptBasis(const sim::ObjectLibrary& library, const sim::KeywordTable& keywords, int width, std::uint64_t seed);

    int width() const { return width_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& concept_name) const { return vectors_.count(concept_name) != 0; }
    // Throws ConfigError for an unknown concept.
    const std::vector<double>& at(const std::string& concept_name) const;
    // Known concept closest by edit distance (ties: alphabetical).
    std::string nearest(const std::string& word) const;
    std::vector<std::string> names() const;

    nlohmann::json to_json() const;

private:
    int width_ = 0;
    std::uint64_t seed_ = 0;
    std::map<std::string, std::vector<double>> vectors_;
};

class AlignedEncoder {
public:
    AlignedEncoder() = default;
    AlignedEncoder(ConceptBasis basis, double sigma_align);
    AlignedEncoder(const sim::ObjectLibrary& library, const sim::KeywordTable& keywords, const EncoderConfig& config);

    const ConceptBasis& basis() const { return basis_; }
    int width() const { return basis_.width(); }
    double sigma_align() const { return sigma_; }

    // Keyword concept plus a 0.05 template-dependent perturbation, unit norm.
    // Unknown keywords throw unless allow_fallback, which maps them to the
    // nearest known concept.
    std::vector<double> encode_text(const sim::Instruction& instruction, bool allow_fallback = false) const;

    // Attribute-weighted concept sum plus isotropic Gaussian noise of total
    // scale σ (per-component σ/√width), unit norm.
    std::vector<double> encode_box(const sim::AttributeMix& descriptor, double sigma, Rng& rng) const;
    std::vector<double> encode_box(const sim::AttributeMix& descriptor, Rng& rng) const {
        return encode_box(descriptor, sigma_, rng);
    }

    // N×width box features for an observation. Box i draws its noise from
    // mix_seed(noise_seed, dominant_uid), so an object keeps its noise for the
    // whole episode.
    Tensor2 encode_boxes(const std::vector<sim::ObjectBox>& boxes, std::uint64_t noise_seed) const;

private:
    ConceptBasis basis_;
    double sigma_ = 0.0;
};

Tensor2 row_of(const std::vector<double>& v);

// Row i = box_i ⊙ lang.
Tensor2 fuse_visual_language(const Tensor2& box_feats, const std::vector<double>& lang);

// Position embedding: positional_encoding(center) through an MLP to the model width.
struct PositionEncoder {
    int bands = 6;
    nn::Mlp mlp;

    PositionEncoder() = default;
    PositionEncoder(const std::string& name, int bands, int width);

    void init(Rng& rng) { mlp.init(rng); }
    void collect(nn::ParameterList& out) { mlp.collect(out); }
    Tensor2 encode_centers(const std::vector<sim::Vec3>& centers) const;  // N×6L
    nn::Var forward(nn::Tape& tape, const std::vector<sim::Vec3>& centers);
};

// key_i = box_i + pos_mlp(positional_encoding(center_i)).
nn::Var fuse_visual_position(nn::Tape& tape, const Tensor2& box_feats, const std::vector<sim::Vec3>& centers,
                             PositionEncoder& position);

// softmax_i(cos(box_i, lang) / τ).
std::vector<double> ground_probabilities(const Tensor2& box_feats, const std::vector<double>& lang,
                                         double temperature = kGroundingTemperature);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace vlg::encoder
