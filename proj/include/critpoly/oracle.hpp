#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "critpoly/precision.hpp"

namespace critpoly {

using BigInt = boost::multiprecision::cpp_int;

// Finite toroidal basis: vertices plus edges carrying their winding
// displacement (in unit-cell steps) around the two torus cycles.
struct TorusBasis {
    int vertices = 0;
    struct Edge {
        int u = 0, v = 0;
        int wx = 0, wy = 0;
    };
    std::vector<Edge> edges;
    std::string provenance;
};

enum class SubsetClass { two_d, zero_d, other };

// Exact integer coefficients of P_B(p); index k is the coefficient of p^k.
struct CriticalPolynomial {
    std::vector<BigInt> coefficients;

    Real eval(const Real& p) const;
    CriticalPolynomial derivative() const;
};

// Classification of one bond configuration: a single cluster whose winding
// subgroup has rank 2 makes the event two-dimensional; all clusters
// winding-free make it zero-dimensional.
SubsetClass classify(const TorusBasis& basis, std::uint32_t open_mask);

// Full enumeration of the 2^E configurations.
CriticalPolynomial critical_polynomial(const TorusBasis& basis,
                                       int edge_cap = 24, int workers = 1);

// The unique root in (0,1), verified by a sign-change count on a
// 1024-point grid.
Real root_in_unit_interval(const CriticalPolynomial& poly, int digits);

// cx-by-cy replication of a catalog lattice's unit cell.
TorusBasis torus_basis(const std::string& lattice, int cx, int cy);

TorusBasis parse_basis_file(const std::string& text);
std::string polynomial_to_string(const CriticalPolynomial& poly);

} // namespace critpoly
