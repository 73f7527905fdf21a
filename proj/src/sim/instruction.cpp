#include "vlg/sim/instruction.hpp"

#include "vlg/common/errors.hpp"

namespace vlg::sim {

std::string Instruction::text() const {
    std::string out = template_text;
    const std::string slot = "{keyword}";
    if (auto pos = out.find(slot); pos != std::string::npos) out.replace(pos, slot.size(), keyword);
    return out;
}

Instruction make_instruction(const KeywordTable& table, int template_id, const std::string& keyword) {
    Instruction ins;
    ins.template_id = template_id;
    ins.template_text = table.template_text(template_id);
    ins.keyword = keyword;
    ins.type = table.type_of(keyword);
    return ins;
}

Instruction sample_instruction(Rng& rng, const KeywordTable& table) {
    std::discrete_distribution<int> type_dist(table.type_probabilities.begin(), table.type_probabilities.end());
    const auto type = static_cast<KeywordType>(type_dist(rng));
    const auto& words = table.of(type);
    if (words.empty()) throw ConfigError("keyword table has no keywords of type " + to_string(type));
    const std::string& keyword = words[uniform_index(rng, words.size())];
    const int tpl = static_cast<int>(uniform_index(rng, table.train_templates.size()));
    Instruction ins;
    ins.template_id = tpl;
    ins.template_text = table.train_templates[static_cast<std::size_t>(tpl)];
    ins.keyword = keyword;
    ins.type = type;
    return ins;
}

}  // namespace vlg::sim
