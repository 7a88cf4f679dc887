#include "nonlocal_dp/format.hpp"

#include <charconv>

namespace nldp {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace nldp
