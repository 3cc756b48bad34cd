#pragma once

#include <string>
#include <utility>
#include <vector>

#include "critpoly/precision.hpp"

namespace critpoly {

// Finite-size threshold sequence p_c(n), widths strictly increasing.
struct Series {
    std::vector<std::pair<int, Real>> points;
    std::string provenance; // computed | paper-table | synthetic

    const Real* at(int n) const {
        for (const auto& [k, v] : points)
            if (k == n) return &v;
        return nullptr;
    }
};

struct ScalingFit {
    std::vector<Real> exponents;
    std::vector<Real> amplitudes; // of the central variant
    Real pc_limit;
    Real error;                // half-width across retained variants
    Real perturbation_shift;   // central-value shift under perturbed high exponents
    std::string variants_used;

    struct Variant {
        int terms = 0;
        int window = 0; // points included (largest widths)
        Real pc;
    };
    std::vector<Variant> variants;
};

// q(n) = (p(n)-p(n-1)) / (p(n-1)-p(n-2)) wherever both predecessors exist.
Series ratio_series(const Series& s);

// Root of q = (1-2/n)^D (n^D-(n-1)^D)/((n-1)^D-(n-2)^D) on the branch
// containing the seed, to 30 digits. The relation is monotone in D.
Real solve_effective_exponent(const Real& q, int n, const Real& seed);

// Removes an exact c + A n^-delta term pairwise: the returned series is the
// per-pair constant c.
Series eliminate_leading(const Series& s, const Real& delta);

// Polynomial fits of D(n) against 1/n over an (order, window) grid;
// returns (limit, error) = (central intercept, max spread to it).
std::pair<Real, Real> fit_exponent_limit(const Series& deltas,
                                         const std::vector<int>& orders,
                                         const std::vector<int>& windows);

// Least-squares fits of the scaling form with fixed exponents over a
// (term count, window) grid; central variant = largest window at the term
// count with the smallest cross-window spread.
ScalingFit extrapolate_pc(const Series& s, const std::vector<Real>& exponents,
                          const std::vector<int>& term_counts,
                          const std::vector<int>& windows);

// Leading correction exponents per lattice class: {6,7,8,...} for kagome,
// three-twelve and snub-hexagonal, {4,6,8,...} for the rest.
std::vector<int> default_scaling_exponents(const std::string& lattice,
                                           int count);

// CSV form: header `n,p_c`, decimal strings at full precision.
Series parse_series_csv(const std::string& text);
std::string series_to_csv(const Series& s, int digits);

} // namespace critpoly
