#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "critpoly/connectivity.hpp"
#include "critpoly/precision.hpp"

namespace critpoly {

// Deterministic fork-join helper. Work over [0,n) is split into contiguous
// chunks, one per worker; chunk boundaries depend only on n and the worker
// count, and each index is processed by exactly one worker.
class WorkerPool {
public:
    explicit WorkerPool(int workers = 1);
    int workers() const { return workers_; }
    void run(std::size_t n,
             const std::function<void(std::size_t, std::size_t)>& chunk) const;

private:
    int workers_ = 1;
};

struct WeightVector {
    const StateSpace* space = nullptr;
    std::vector<Real> entries;
};

struct EigenResult {
    Real lambda;
    WeightVector vector; // converged, sup-norm 1 (zero vector when lambda=0)
    std::uint64_t iterations = 0;
};

// One lattice row in one topological sector: per-step branch targets over
// the sector's state space, applied as a sparse operator on weight vectors.
//
// For each step only one branch moves the state (an H step's closed branch
// and a V step's open branch are identities), so the plan stores a single
// target id per state per step. Branches that leave the sector map to the
// exit sentinel and their weight is discarded (or routed to `sink`).
class TransferOperator {
public:
    static constexpr std::uint32_t kExit = 0xFFFFFFFFu;

    TransferOperator(const InstProgram& prog, Sector sector,
                     std::uint64_t state_cap = 100'000'000ull);

    const StateSpace& space() const { return space_; }
    Sector sector() const { return sector_; }
    const InstProgram& program() const { return prog_; }

    // The single-nonzero-component start vector of the sector.
    WeightVector start_vector(const Precision& prec) const;

    // out <- row(in) at bond weight w. Bit-identical for any worker count.
    // With sink, sector-exit branch weight accumulates into *sink.
    void apply_row(const std::vector<Real>& in, std::vector<Real>& out,
                   const BondWeight& w, const Precision& prec,
                   const WorkerPool& pool, Real* sink = nullptr) const;

    // Power iteration to the leading eigenvalue. Normalization is by
    // sup-norm; the eigenvalue is read off at the start state's component,
    // falling back to the sup-norm ratio when that component underflows.
    EigenResult leading_eigenvalue(const BondWeight& w, const Precision& prec,
                                   const WeightVector* init,
                                   const WorkerPool& pool,
                                   std::uint64_t iter_cap = 10'000) const;

private:
    InstProgram prog_;
    Sector sector_;
    StateSpace space_;
    // per step, the moved-branch target of every state (kExit = sector exit)
    std::vector<std::vector<std::uint32_t>> targets_;
    std::vector<std::uint8_t> step_skip_; // pure-identity steps

    void build_targets();
};

} // namespace critpoly
