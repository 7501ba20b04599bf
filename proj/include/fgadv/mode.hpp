#pragma once

#include <string>

#include "fgadv/errors.hpp"

namespace fgadv {

enum class AttackMode { removal, addition };

inline std::string to_string(AttackMode mode) {
    return mode == AttackMode::removal ? "removal" : "addition";
}

inline AttackMode attack_mode_from_string(const std::string& s) {
    if (s == "removal") return AttackMode::removal;
    if (s == "addition") return AttackMode::addition;
    throw ConfigError("unknown attack mode: " + s);
}

}  // namespace fgadv
