#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace mozart {

// Shortest decimal form that parses back to the identical double. Keeps all
// text artifacts byte-stable across reruns.
inline std::string double_to_string(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace mozart
