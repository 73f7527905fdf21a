#pragma once

#include <string>

#include "vlg/common/random.hpp"
#include "vlg/sim/library.hpp"

namespace vlg::sim {

struct Instruction {
    int template_id = 0;
    std::string template_text = "Give me the {keyword}";
    std::string keyword;
    KeywordType type = KeywordType::label;

    std::string text() const;
    bool operator==(const Instruction&) const = default;
};

Instruction make_instruction(const KeywordTable& table, int template_id, const std::string& keyword);

// Keyword type with the table's probabilities (0.4/0.2/0.2/0.2 by default), then
// a keyword uniformly within the type and a training template uniformly.
Instruction sample_instruction(Rng& rng, const KeywordTable& table);

}  // namespace vlg::sim
