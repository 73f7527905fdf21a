#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vlg::sim {

enum class Shape { circle, square, elongated };

// Footprint shapes double as shape keywords: round, square, long.
std::string shape_concept(Shape s);
std::string to_string(Shape s);
Shape shape_from_string(const std::string& s);

// Attribute weights over concept names, sorted by name, summing to one.
using AttributeMix = std::vector<std::pair<std::string, double>>;

struct ObjectSpec {
    std::string label;
    std::vector<std::string> general;
    std::string color;
    Shape shape = Shape::circle;
    double length = 0.06;  // circle: diameter; square: side; elongated: long side
    double width = 0.06;   // elongated: short side; equals length otherwise
    double height = 0.05;
    std::vector<std::string> functions;
    bool unseen = false;

    // Narrowest extent the gripper has to close across.
    double grasp_extent() const;
    bool matches(const std::string& keyword) const;
    AttributeMix attributes() const;
};

// Every attribute of one object: label, general labels, color, shape, functions.
std::vector<std::string> concepts_of(const ObjectSpec& spec);

class ObjectLibrary {
public:
    ObjectLibrary() = default;
    explicit ObjectLibrary(std::vector<ObjectSpec> specs);

    static ObjectLibrary load(const std::filesystem::path& path);
    static ObjectLibrary from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    const std::vector<ObjectSpec>& specs() const { return specs_; }
    std::vector<const ObjectSpec*> split(bool unseen) const;
    std::size_t size() const { return specs_.size(); }
    bool empty() const { return specs_.empty(); }

private:
    std::vector<ObjectSpec> specs_;
};

enum class KeywordType { label = 0, general_label = 1, shape_or_color = 2, function = 3 };
constexpr std::array<KeywordType, 4> kKeywordTypes{KeywordType::label, KeywordType::general_label,
                                                    KeywordType::shape_or_color, KeywordType::function};
std::string to_string(KeywordType t);
KeywordType keyword_type_from_string(const std::string& s);

// General-label and function keywords put two targets in a scene.
inline bool is_two_target(KeywordType t) {
    return t == KeywordType::general_label || t == KeywordType::function;
}

struct KeywordTable {
    std::array<std::vector<std::string>, 4> keywords;
    std::array<double, 4> type_probabilities{0.4, 0.2, 0.2, 0.2};
    std::vector<std::string> train_templates;
    std::vector<std::string> unseen_templates;

    static KeywordTable load(const std::filesystem::path& path);
    static KeywordTable from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    const std::vector<std::string>& of(KeywordType t) const { return keywords[static_cast<std::size_t>(t)]; }
    std::size_t keyword_count() const;
    // Throws if the keyword is in no list.
    KeywordType type_of(const std::string& keyword) const;
    bool contains(const std::string& keyword) const;
    // Templates are indexed train first, then unseen.
    const std::string& template_text(int template_id) const;
    int template_count() const { return static_cast<int>(train_templates.size() + unseen_templates.size()); }
};

// Loads data/objects.json and data/keywords.json from the given directory.
struct WorldData {
    ObjectLibrary library;
    KeywordTable keywords;

    static WorldData load(const std::filesystem::path& dir);
    static std::filesystem::path default_dir();
};

}  // namespace vlg::sim
