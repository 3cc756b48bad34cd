#include "critpoly/threshold.hpp"

#include <array>
#include <sstream>

#include "critpoly/errors.hpp"
#include "critpoly/extrapolate.hpp"

namespace critpoly {

Real householder_step(const Real& f_minus, const Real& f_center,
                      const Real& f_plus, const Real& v, const Real& epsilon) {
    if (!(epsilon > 0)) throw invalid_input_error("householder: epsilon must be > 0");
    Real d1 = (f_plus - f_minus) / (2 * epsilon);
    Real d2 = (f_plus - 2 * f_center + f_minus) / (epsilon * epsilon);
    Real denom = 2 * d1 * d1 - f_center * d2;
    if (denom == 0) throw degenerate_step_error();
    Real step = 2 * f_center * d1 / denom;
    // a usable second-order step never exceeds the Newton step by much;
    // a wild ratio signals a degenerate sampling
    if (d1 != 0) {
        Real newton = f_center / d1;
        if (abs(step) > 8 * abs(newton) + 1) throw degenerate_step_error();
    }
    return v - step;
}

BondWeight initial_guess(const ResultLedger& ledger, const std::string& lattice,
                         int n) {
    auto recs = ledger.for_lattice(lattice);
    // smaller widths only, most recent record per width
    std::vector<const ThresholdRecord*> by_n;
    for (const auto& r : recs) {
        if (r.n >= n) continue;
        bool replaced = false;
        for (auto& p : by_n)
            if (p->n == r.n) { p = &r; replaced = true; break; }
        if (!replaced) by_n.push_back(&r);
    }
    std::sort(by_n.begin(), by_n.end(),
              [](auto* a, auto* b) { return a->n < b->n; });

    if (by_n.empty()) return BondWeight::from_p(Real("0.5"));
    if (by_n.size() < 3) return BondWeight::from_v(Real(by_n.back()->v_root));

    // fit p(k) = pc + A k^-d1 + B k^-d2 through the last three widths with
    // the lattice's leading exponents, then evaluate at the target width
    auto expo = default_scaling_exponents(lattice, 2);
    const auto* r1 = by_n[by_n.size() - 3];
    const auto* r2 = by_n[by_n.size() - 2];
    const auto* r3 = by_n[by_n.size() - 1];

    auto basis = [&](int k, int d) -> Real { return pow(Real(k), -d); };
    // 3x3 solve by elimination
    std::array<std::array<Real, 4>, 3> m;
    const std::array<const ThresholdRecord*, 3> rows = {r1, r2, r3};
    for (int i = 0; i < 3; ++i) {
        m[i][0] = 1;
        m[i][1] = basis(rows[i]->n, expo[0]);
        m[i][2] = basis(rows[i]->n, expo[1]);
        m[i][3] = Real(rows[i]->p_root);
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (abs(m[r][col]) > abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        if (m[col][col] == 0) return BondWeight::from_v(Real(r3->v_root));
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            Real f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    Real pc = m[0][3] / m[0][0];
    Real A = m[1][3] / m[1][1];
    Real B = m[2][3] / m[2][2];
    Real p_hat = pc + A * basis(n, expo[0]) + B * basis(n, expo[1]);
    if (!(p_hat > 0 && p_hat < 1)) return BondWeight::from_v(Real(r3->v_root));
    return BondWeight::from_p(p_hat);
}

namespace {

// per-sector evaluation engine with per-offset warm starts
struct SectorEngine {
    TransferOperator op;
    std::array<std::optional<WeightVector>, 3> seeds; // -eps, center, +eps

    SectorEngine(const InstProgram& prog, Sector sector, std::uint64_t cap)
        : op(prog, sector, cap) {}

    Real eval(const BondWeight& w, const Precision& prec, int offset_idx,
              const WorkerPool& pool, std::uint64_t iter_cap,
              std::uint64_t& iters_total) {
        const WeightVector* seed = nullptr;
        if (seeds[offset_idx]) seed = &*seeds[offset_idx];
        else if (seeds[1]) seed = &*seeds[1];
        EigenResult res = op.leading_eigenvalue(w, prec, seed, pool, iter_cap);
        iters_total += res.iterations;
        Real lambda = res.lambda;
        seeds[offset_idx] = std::move(res.vector);
        return lambda;
    }
};

} // namespace

ThresholdRecord find_threshold(const LatticeSpec& lattice, int n,
                               const SolverConfig& cfg, ResultLedger& ledger) {
    set_working_digits(cfg.prec.digits + 10);
    const Real delta = cfg.prec.delta;
    const Real eps = cfg.epsilon;
    WorkerPool pool(cfg.workers);

    InstProgram prog = instantiate(lattice, n);
    SectorEngine open(prog, Sector::open, cfg.state_cap);
    SectorEngine closed(prog, Sector::closed, cfg.state_cap);

    std::uint64_t iters_total = 0;
    auto eval_f = [&](const Real& v, int offset_idx) -> Real {
        BondWeight w = BondWeight::from_v(v);
        Real lo = open.eval(w, cfg.prec, offset_idx, pool, cfg.iter_cap,
                            iters_total);
        Real lc = closed.eval(w, cfg.prec, offset_idx, pool, cfg.iter_cap,
                              iters_total);
        if (lc == 0)
            throw nonconvergence_error("closed-sector eigenvalue vanished");
        return lo / lc - 1;
    };

    // bracket bookkeeping: f is -1 at p=0 and +1 near p=1
    Real v_lo = -1, v_hi = -1;
    auto note_sign = [&](const Real& v, const Real& f) {
        if (f < 0) { if (v_lo < 0 || v > v_lo) v_lo = v; }
        else { if (v_hi < 0 || v < v_hi) v_hi = v; }
    };
    auto bracket_scan = [&]() {
        Real prev_v = -1, prev_f = 0;
        for (int k = 1; k <= 9; ++k) {
            Real p = Real(k) / 10;
            Real v = p / (1 - p);
            Real f = eval_f(v, 1);
            note_sign(v, f);
            if (prev_v > 0 && prev_f * f < 0) return;
            prev_v = v;
            prev_f = f;
        }
        throw nonconvergence_error(
            "no sign change of Lambda_open - Lambda_closed on the p=0.1..0.9 grid (" +
            lattice.name + ", n=" + std::to_string(n) + ")");
    };

    Real v = cfg.guess ? cfg.guess->v : initial_guess(ledger, lattice.name, n).v;
    if (!(v > 0)) v = 1;

    std::ostringstream trace;
    int hh_steps = 0;
    Real g1 = eval_f(v, 1);
    note_sign(v, g1);
    trace << "v=" << to_decimal_string(v, 20) << " f=" << to_decimal_string(g1, 8);

    bool converged = abs(g1) < delta;
    for (int m = 0; m < cfg.max_householder && !converged; ++m) {
        Real g0 = eval_f(v - eps, 0);
        Real g2 = eval_f(v + eps, 2);

        Real v_next;
        bool stepped = false;
        try {
            v_next = householder_step(g0, g1, g2, v, eps);
            stepped = v_next > 0;
        } catch (const degenerate_step_error&) {
            stepped = false;
        }
        if (stepped && v_lo > 0 && v_hi > 0 &&
            (v_next < v_lo / 2 || v_next > v_hi * 2))
            stepped = false; // wild step outside the known bracket
        if (!stepped) {
            if (!(v_lo > 0) || !(v_hi > 0)) bracket_scan();
            if (!(v_lo > 0) || !(v_hi > 0))
                throw nonconvergence_error("bracketing failed");
            v_next = (v_lo + v_hi) / 2;
        }

        Real dv = abs(v_next - v);
        v = v_next;
        ++hh_steps;
        g1 = eval_f(v, 1);
        note_sign(v, g1);
        trace << "\n  v=" << to_decimal_string(v, 40)
              << " f=" << to_decimal_string(g1, 8) << " dv="
              << to_decimal_string(dv, 8);
        if (abs(g1) < delta || dv < delta * (1 + abs(v))) converged = true;
    }
    if (!converged)
        throw nonconvergence_error("threshold iteration for " + lattice.name +
                                   " n=" + std::to_string(n) +
                                   " did not converge; trace:\n" + trace.str());

    ThresholdRecord rec;
    rec.lattice = lattice.name;
    rec.n = n;
    rec.digits = cfg.prec.digits;
    rec.v_root = to_decimal_string(v, cfg.prec.digits);
    rec.p_root = to_decimal_string(v / (1 + v), cfg.prec.digits);
    rec.householder_steps = hh_steps;
    rec.power_iterations_total = iters_total;
    rec.timestamp = iso8601_now();
    ledger.append(rec);
    return rec;
}

} // namespace critpoly
