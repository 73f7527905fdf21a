#include "vlg/sim/library.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "vlg/common/errors.hpp"

#ifndef VLG_DATA_DIR
#define VLG_DATA_DIR "data"
#endif

namespace vlg::sim {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void expect_format(const json& j, const char* format) {
    if (j.value("format", std::string{}) != format || j.value("version", 0) != 1)
        throw ConfigError(std::string("expected a version-1 ") + format + " document");
}

// Relative attribute weights before normalisation.
constexpr double kLabelWeight = 0.4;
constexpr double kGeneralWeight = 0.2;
constexpr double kColorWeight = 0.15;
constexpr double kShapeWeight = 0.1;
constexpr double kFunctionWeight = 0.15;

}  // namespace

std::string shape_concept(Shape s) {
    switch (s) {
        case Shape::circle: return "round";
        case Shape::square: return "square";
        case Shape::elongated: return "long";
    }
    return "round";
}

std::string to_string(Shape s) {
    switch (s) {
        case Shape::circle: return "circle";
        case Shape::square: return "square";
        case Shape::elongated: return "elongated";
    }
    return "circle";
}

Shape shape_from_string(const std::string& s) {
    if (s == "circle") return Shape::circle;
    if (s == "square") return Shape::square;
    if (s == "elongated") return Shape::elongated;
    throw ConfigError("unknown shape '" + s + "'");
}

double ObjectSpec::grasp_extent() const { return shape == Shape::elongated ? width : length; }

bool ObjectSpec::matches(const std::string& keyword) const {
    auto c = concepts_of(*this);
    return std::find(c.begin(), c.end(), keyword) != c.end();
}

std::vector<std::string> concepts_of(const ObjectSpec& spec) {
    std::vector<std::string> out{spec.label};
    out.insert(out.end(), spec.general.begin(), spec.general.end());
    out.push_back(spec.color);
    out.push_back(shape_concept(spec.shape));
    out.insert(out.end(), spec.functions.begin(), spec.functions.end());
    return out;
}

AttributeMix ObjectSpec::attributes() const {
    std::map<std::string, double> w;
    w[label] += kLabelWeight;
    for (const auto& g : general) w[g] += kGeneralWeight / static_cast<double>(general.size());
    w[color] += kColorWeight;
    w[shape_concept(shape)] += kShapeWeight;
    for (const auto& f : functions) w[f] += kFunctionWeight / static_cast<double>(functions.size());
    double total = 0.0;
    for (auto& [_, v] : w) total += v;
    AttributeMix out;
    for (auto& [k, v] : w) out.emplace_back(k, v / total);
    return out;
}

ObjectLibrary::ObjectLibrary(std::vector<ObjectSpec> specs) : specs_(std::move(specs)) {
    for (const auto& s : specs_) {
        if (s.label.empty() || s.color.empty()) throw ConfigError("object spec needs a label and a color");
        if (s.length <= 0 || s.width <= 0 || s.height <= 0 || s.width > s.length)
            throw ConfigError("object '" + s.label + "': invalid dimensions");
    }
}

std::vector<const ObjectSpec*> ObjectLibrary::split(bool unseen) const {
    std::vector<const ObjectSpec*> out;
    for (const auto& s : specs_)
        if (s.unseen == unseen) out.push_back(&s);
    return out;
}

ObjectLibrary ObjectLibrary::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

ObjectLibrary ObjectLibrary::from_json(const json& j) {
    expect_format(j, "vlg.object_library");
    std::vector<ObjectSpec> specs;
    for (const auto& o : j.at("objects")) {
        ObjectSpec s;
        s.label = o.at("label").get<std::string>();
        s.general = o.value("general", std::vector<std::string>{});
        s.color = o.at("color").get<std::string>();
        s.shape = shape_from_string(o.at("shape").get<std::string>());
        s.length = o.at("length").get<double>();
        s.width = o.value("width", s.length);
        if (s.shape != Shape::elongated) s.width = s.length;
        s.height = o.at("height").get<double>();
        s.functions = o.value("functions", std::vector<std::string>{});
        s.unseen = o.value("split", std::string("seen")) == "unseen";
        specs.push_back(std::move(s));
    }
    return ObjectLibrary(std::move(specs));
}

json ObjectLibrary::to_json() const {
    json objs = json::array();
    for (const auto& s : specs_) {
        objs.push_back({{"label", s.label},
                        {"general", s.general},
                        {"color", s.color},
                        {"shape", to_string(s.shape)},
                        {"length", s.length},
                        {"width", s.width},
                        {"height", s.height},
                        {"functions", s.functions},
                        {"split", s.unseen ? "unseen" : "seen"}});
    }
    return {{"format", "vlg.object_library"}, {"version", 1}, {"objects", objs}};
}

std::string to_string(KeywordType t) {
    switch (t) {
        case KeywordType::label: return "label";
        case KeywordType::general_label: return "general_label";
        case KeywordType::shape_or_color: return "shape_or_color";
        case KeywordType::function: return "function";
    }
    return "label";
}

KeywordType keyword_type_from_string(const std::string& s) {
    for (KeywordType t : kKeywordTypes)
        if (to_string(t) == s) return t;
    throw ConfigError("unknown keyword type '" + s + "'");
}

std::size_t KeywordTable::keyword_count() const {
    std::size_t n = 0;
    for (const auto& v : keywords) n += v.size();
    return n;
}

KeywordType KeywordTable::type_of(const std::string& keyword) const {
    for (KeywordType t : kKeywordTypes) {
        const auto& v = of(t);
        if (std::find(v.begin(), v.end(), keyword) != v.end()) return t;
    }
    throw ConfigError("keyword '" + keyword + "' is not in the vocabulary");
}

bool KeywordTable::contains(const std::string& keyword) const {
    for (const auto& v : keywords)
        if (std::find(v.begin(), v.end(), keyword) != v.end()) return true;
    return false;
}

const std::string& KeywordTable::template_text(int template_id) const {
    if (template_id < 0 || template_id >= template_count())
        throw ConfigError("template id " + std::to_string(template_id) + " out of range");
    const auto id = static_cast<std::size_t>(template_id);
    return id < train_templates.size() ? train_templates[id] : unseen_templates[id - train_templates.size()];
}

KeywordTable KeywordTable::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

KeywordTable KeywordTable::from_json(const json& j) {
    expect_format(j, "vlg.keywords");
    KeywordTable t;
    for (KeywordType type : kKeywordTypes) {
        const auto key = to_string(type);
        t.keywords[static_cast<std::size_t>(type)] = j.at("keywords").at(key).get<std::vector<std::string>>();
        t.type_probabilities[static_cast<std::size_t>(type)] = j.at("type_probabilities").at(key).get<double>();
        if (t.of(type).empty()) throw ConfigError("keyword table has no '" + key + "' keywords");
    }
    t.train_templates = j.at("templates").at("train").get<std::vector<std::string>>();
    t.unseen_templates = j.at("templates").value("unseen", std::vector<std::string>{});
    if (t.train_templates.empty()) throw ConfigError("keyword table has no training templates");
    for (const auto& tpl : t.train_templates)
        if (tpl.find("{keyword}") == std::string::npos) throw ConfigError("template without {keyword}: " + tpl);
    return t;
}

json KeywordTable::to_json() const {
    json kw, probs;
    for (KeywordType type : kKeywordTypes) {
        kw[to_string(type)] = of(type);
        probs[to_string(type)] = type_probabilities[static_cast<std::size_t>(type)];
    }
    return {{"format", "vlg.keywords"},
            {"version", 1},
            {"type_probabilities", probs},
            {"keywords", kw},
            {"templates", {{"train", train_templates}, {"unseen", unseen_templates}}}};
}

WorldData WorldData::load(const std::filesystem::path& dir) {
    return {ObjectLibrary::load(dir / "objects.json"), KeywordTable::load(dir / "keywords.json")};
}

std::filesystem::path WorldData::default_dir() {
    if (const char* env = std::getenv("VLG_DATA_DIR")) return env;
    return VLG_DATA_DIR;
}

}  // namespace vlg::sim
