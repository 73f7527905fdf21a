#include "vlg/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vlg/common/errors.hpp"

namespace vlg::encoder {

namespace {

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) throw NumericError("encoder: cannot normalise a zero vector");
    for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(Rng& rng, int width) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(width));
    for (double& x : v) x = n(rng);
    return v;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

ConceptBasis::ConceptBasis(const sim::ObjectLibrary& library, const sim::KeywordTable& keywords, int width,
                           std::uint64_t seed)
    : width_(width), seed_(seed) {
    if (width < 1) throw ConfigError("concept basis: width must be positive");
    std::set<std::string> names;
    std::map<std::string, std::set<std::string>> generals;
    for (const auto& spec : library.specs()) {
        for (const auto& c : sim::concepts_of(spec)) names.insert(c);
        generals[spec.label].insert(spec.general.begin(), spec.general.end());
    }
    for (auto t : sim::kKeywordTypes)
        for (const auto& k : keywords.of(t)) names.insert(k);

    // independent directions, Gram-Schmidt when they fit
    Rng rng(seed);
    const bool orthogonal = names.size() <= static_cast<std::size_t>(width);
    std::map<std::string, std::vector<double>> base;
    std::vector<std::vector<double>> done;
    for (const auto& name : names) {
        std::vector<double> v = gaussian_vector(rng, width);
        if (orthogonal)
            for (const auto& u : done) {
                const double d = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * u[i];
            }
        normalize(v);
        done.push_back(v);
        base[name] = std::move(v);
    }
    vectors_ = base;
    for (const auto& [label, gens] : generals) {
        if (gens.empty()) continue;
        std::vector<double> v = base.at(label);
        for (const auto& g : gens)
            if (g != label)
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += kGeneralShare * base.at(g)[i];
        normalize(v);
        vectors_[label] = std::move(v);
    }
}

const std::vector<double>& ConceptBasis::at(const std::string& concept_name) const {
    auto it = vectors_.find(concept_name);
    if (it == vectors_.end()) throw ConfigError("encoder: unknown concept '" + concept_name + "'");
    return it->second;
}

std::string ConceptBasis::nearest(const std::string& word) const {
    if (vectors_.empty()) throw ConfigError("encoder: empty concept basis");
    std::string best;
    std::size_t best_d = static_cast<std::size_t>(-1);
    for (const auto& [name, _] : vectors_)
        if (auto d = edit_distance(word, name); d < best_d) best_d = d, best = name;
    return best;
}

std::vector<std::string> ConceptBasis::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : vectors_) out.push_back(k);
    return out;
}

nlohmann::json ConceptBasis::to_json() const {
    nlohmann::json concepts = nlohmann::json::object();
    for (const auto& [k, v] : vectors_) concepts[k] = v;
    return {{"format", "vlg.concept_basis"}, {"version", 1}, {"width", width_}, {"seed", seed_}, {"concepts", concepts}};
}

AlignedEncoder::AlignedEncoder(ConceptBasis basis, double sigma_align) : basis_(std::move(basis)), sigma_(sigma_align) {
    if (!(sigma_align >= 0.0)) throw ConfigError("encoder: sigma_align must be non-negative");
}

AlignedEncoder::AlignedEncoder(const sim::ObjectLibrary& library, const sim::KeywordTable& keywords,
                               const EncoderConfig& config)
    : AlignedEncoder(ConceptBasis(library, keywords, config.width, config.basis_seed), config.sigma_align) {}

std::vector<double> AlignedEncoder::encode_text(const sim::Instruction& instruction, bool allow_fallback) const {
    std::string keyword = instruction.keyword;
    if (!basis_.contains(keyword)) {
        if (!allow_fallback) throw ConfigError("encoder: keyword '" + keyword + "' is not in the vocabulary");
        keyword = basis_.nearest(keyword);
    }
    std::vector<double> v = basis_.at(keyword);
    Rng rng(mix_seed(basis_.seed(), fnv1a(instruction.template_text)));
    std::vector<double> t = gaussian_vector(rng, width());
    normalize(t);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += kTemplatePerturbation * t[i];
    normalize(v);
    return v;
}

std::vector<double> AlignedEncoder::encode_box(const sim::AttributeMix& descriptor, double sigma, Rng& rng) const {
    std::vector<double> v(static_cast<std::size_t>(width()), 0.0);
    for (const auto& [name, w] : descriptor) {
        const auto& c = basis_.at(name);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * c[i];
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> n(0.0, sigma / std::sqrt(static_cast<double>(width())));
        for (double& x : v) x += n(rng);
    }
    normalize(v);
    return v;
}

Tensor2 AlignedEncoder::encode_boxes(const std::vector<sim::ObjectBox>& boxes, std::uint64_t noise_seed) const {
    Tensor2 out(static_cast<Eigen::Index>(boxes.size()), width());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        Rng rng(mix_seed(noise_seed, static_cast<std::uint64_t>(boxes[i].dominant_uid)));
        const auto v = encode_box(boxes[i].descriptor, rng);
        for (int c = 0; c < width(); ++c) out(static_cast<Eigen::Index>(i), c) = v[static_cast<std::size_t>(c)];
    }
    return out;
}

Tensor2 row_of(const std::vector<double>& v) {
    Tensor2 t(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) t(0, static_cast<Eigen::Index>(i)) = v[i];
    return t;
}

Tensor2 fuse_visual_language(const Tensor2& box_feats, const std::vector<double>& lang) {
    if (box_feats.cols() != static_cast<Eigen::Index>(lang.size()))
        throw ConfigError("fuse_visual_language: width " + std::to_string(box_feats.cols()) + " vs " +
                          std::to_string(lang.size()));
    Tensor2 out = box_feats;
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i).array() *= row_of(lang).row(0).array();
    return out;
}

PositionEncoder::PositionEncoder(const std::string& name, int bands_, int width)
    : bands(bands_), mlp(name, {6 * bands_, width, width}) {
    if (bands_ < 1) throw ConfigError("position encoder: bands must be at least 1");
}

Tensor2 PositionEncoder::encode_centers(const std::vector<sim::Vec3>& centers) const {
    Tensor2 out(static_cast<Eigen::Index>(centers.size()), 6 * bands);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto e = nn::positional_encoding(centers[i], bands);
        for (std::size_t c = 0; c < e.size(); ++c) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = e[c];
    }
    return out;
}

nn::Var PositionEncoder::forward(nn::Tape& tape, const std::vector<sim::Vec3>& centers) {
    return mlp.forward(tape, tape.constant(encode_centers(centers)));
}

nn::Var fuse_visual_position(nn::Tape& tape, const Tensor2& box_feats, const std::vector<sim::Vec3>& centers,
                             PositionEncoder& position) {
    if (box_feats.rows() != static_cast<Eigen::Index>(centers.size()))
        throw ConfigError("fuse_visual_position: " + std::to_string(box_feats.rows()) + " features for " +
                          std::to_string(centers.size()) + " centres");
    return tape.add(tape.constant(box_feats), position.forward(tape, centers));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

std::vector<double> ground_probabilities(const Tensor2& box_feats, const std::vector<double>& lang, double temperature) {
    if (box_feats.rows() == 0) throw ConfigError("ground_probabilities: no boxes");
    if (!(temperature > 0.0)) throw ConfigError("ground_probabilities: temperature must be positive");
    std::vector<double> logits(static_cast<std::size_t>(box_feats.rows()));
    for (Eigen::Index i = 0; i < box_feats.rows(); ++i)
        logits[static_cast<std::size_t>(i)] =
            cosine(std::span<const double>(box_feats.row(i).data(), static_cast<std::size_t>(box_feats.cols())), lang) /
            temperature;
    return nn::softmax(logits);
}

}  // namespace vlg::encoder
