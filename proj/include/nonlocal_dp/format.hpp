#ifndef NONLOCAL_DP_FORMAT_HPP
#define NONLOCAL_DP_FORMAT_HPP

#include <string>

namespace nldp {

/// Shortest decimal form that round-trips the double exactly; byte-stable.
std::string format_double(double v);

}  // namespace nldp

#endif
