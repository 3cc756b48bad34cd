#include "critpoly/precision.hpp"

namespace critpoly {

std::string to_decimal_string(const Real& x, int digits) {
    return x.str(digits, std::ios_base::fmtflags(0));
}

} // namespace critpoly
