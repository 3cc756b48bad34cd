#pragma once

#include <optional>

#include "critpoly/ledger.hpp"
#include "critpoly/transfer.hpp"

namespace critpoly {

struct SolverConfig {
    Precision prec;
    Real epsilon;          // finite-difference step, default sqrt(delta)
    int max_householder = 8;
    std::optional<BondWeight> guess;
    int workers = 1;
    std::uint64_t state_cap = 100'000'000ull;
    std::uint64_t iter_cap = 10'000;

    static SolverConfig make(const Precision& prec) {
        SolverConfig c;
        c.prec = prec;
        c.epsilon = sqrt(prec.delta);
        return c;
    }
};

// Degenerate second-order step (vanishing denominator); callers fall back
// to a bisection step.
struct degenerate_step_error : std::runtime_error {
    degenerate_step_error() : std::runtime_error("degenerate Householder step") {}
};

// Second-order Householder update from three central samples
// f(v-eps), f(v), f(v+eps):  v' = v - 2 f f' / (2 f'^2 - f f'').
Real householder_step(const Real& f_minus, const Real& f_center,
                      const Real& f_plus, const Real& v, const Real& epsilon);

// Extrapolation-based starting point: >=3 smaller-width records fit the
// truncated scaling form, 1-2 records reuse the largest width, none -> p=1/2.
BondWeight initial_guess(const ResultLedger& ledger, const std::string& lattice,
                         int n);

// Solves Lambda_open(v) = Lambda_closed(v) for one (lattice, n) and appends
// the record to the ledger. Eigenvalues are compared through the scale-free
// residual f = Lambda_open/Lambda_closed - 1 (same root, tolerances act
// relatively); each evaluation warm-starts from the previous converged
// vector of the same sector and offset.
ThresholdRecord find_threshold(const LatticeSpec& lattice, int n,
                               const SolverConfig& cfg, ResultLedger& ledger);

} // namespace critpoly
