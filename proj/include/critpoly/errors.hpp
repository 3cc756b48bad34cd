#pragma once

#include <stdexcept>
#include <string>

namespace critpoly {

// Error classes map onto CLI exit codes: invalid input -> 2,
// non-convergence -> 3, capacity -> 4.

struct invalid_input_error : std::runtime_error {
    explicit invalid_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct nonconvergence_error : std::runtime_error {
    explicit nonconvergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct capacity_error : std::runtime_error {
    capacity_error(const std::string& msg, unsigned long long attained)
        : std::runtime_error(msg), attained_count(attained) {}
    unsigned long long attained_count = 0;
};

// Internal contract violations (row-program bugs, index mismatches).
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace critpoly
