#include "vlg/common/random.hpp"

#include <sstream>

#include "vlg/common/errors.hpp"

namespace vlg {

std::string rng_state(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
    std::istringstream is(state);
    is >> rng;
    if (!is) throw ConfigError("malformed rng state");
}

}  // namespace vlg
