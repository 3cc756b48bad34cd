#include "critpoly/transfer.hpp"

#include <mpfr.h>

#include <algorithm>
#include <array>
#include <thread>

#include "critpoly/errors.hpp"

namespace critpoly {

namespace {

inline mpfr_ptr mp(Real& x) { return x.backend().data(); }
inline mpfr_srcptr mp(const Real& x) { return x.backend().data(); }

// value copied and rounded to the current working precision
Real at_working(const Real& x) {
    Real y = x;
    y.precision(Real::default_precision());
    return y;
}

} // namespace

WorkerPool::WorkerPool(int workers) : workers_(workers < 1 ? 1 : workers) {}

void WorkerPool::run(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& chunk)
    const {
    if (n == 0) return;
    int w = workers_;
    if (w == 1 || n < 64) {
        chunk(0, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(w - 1);
    for (int k = 1; k < w; ++k) {
        std::size_t lo = n * k / w, hi = n * (k + 1) / w;
        threads.emplace_back([&chunk, lo, hi] { chunk(lo, hi); });
    }
    chunk(0, n / w);
    for (auto& t : threads) t.join();
}

TransferOperator::TransferOperator(const InstProgram& prog, Sector sector,
                                   std::uint64_t state_cap)
    : prog_(prog),
      sector_(sector),
      space_(close_state_space(prog.width, sector, prog, state_cap)) {
    build_targets();
}

void TransferOperator::build_targets() {
    const std::size_t n_states = space_.size();
    const int width = space_.width();
    targets_.resize(prog_.steps.size());
    step_skip_.assign(prog_.steps.size(), 0);
    std::array<std::uint8_t, 64> buf{};
    for (std::size_t k = 0; k < prog_.steps.size(); ++k) {
        const Step& st = prog_.steps[k];
        bool pure_identity =
            (st.type == StepType::H && st.cls == BondClass::forced_closed) ||
            (st.type == StepType::V && st.cls == BondClass::forced_open);
        if (pure_identity) {
            step_skip_[k] = 1;
            continue;
        }
        auto& tgt = targets_[k];
        tgt.resize(n_states);
        for (std::uint32_t id = 0; id < n_states; ++id) {
            if (!apply_step_packed(space_.packed(id), width, sector_, st,
                                   buf.data())) {
                tgt[id] = kExit;
                continue;
            }
            std::uint32_t to = space_.find_packed(buf.data());
            if (to == StateSpace::npos)
                throw contract_error("state space not closed under program");
            tgt[id] = to;
        }
    }
}

WeightVector TransferOperator::start_vector(const Precision& prec) const {
    set_working_digits(prec.digits + 10);
    WeightVector v;
    v.space = &space_;
    v.entries.assign(space_.size(), Real(0));
    v.entries[0] = 1;
    return v;
}

void TransferOperator::apply_row(const std::vector<Real>& in,
                                 std::vector<Real>& out, const BondWeight& w,
                                 const Precision& prec, const WorkerPool& pool,
                                 Real* sink) const {
    const std::size_t n = space_.size();
    if (in.size() != n || out.size() != n)
        throw contract_error("apply_row: vector does not match state space");
    set_working_digits(prec.digits + 10);

    const Real p = at_working(w.p);
    const Real q = 1 - p;
    const Real one = 1;

    // ping-pong buffers; scratch reused across calls at fixed precision
    static thread_local std::vector<Real> scratch;
    static thread_local unsigned scratch_prec = 0;
    unsigned cur_prec = Real::default_precision();
    if (scratch.size() != n || scratch_prec != cur_prec) {
        scratch.assign(n, Real(0));
        scratch_prec = cur_prec;
    }
    for (std::size_t i = 0; i < n; ++i) mpfr_set(mp(out[i]), mp(in[i]), MPFR_RNDN);

    // transpose scratch: entries bucketed by target, ascending source
    std::vector<std::uint32_t> ofs(n + 2), entries(n);

    for (std::size_t k = 0; k < prog_.steps.size(); ++k) {
        if (step_skip_[k]) continue;
        const Step& st = prog_.steps[k];
        const auto& tgt = targets_[k];

        // factors: identity branch and moved branch
        bool has_id = st.cls == BondClass::bond;
        const Real& f_id = st.type == StepType::H ? q : p;
        const Real& f_mv =
            st.cls == BondClass::bond ? (st.type == StepType::H ? p : q) : one;

        std::fill(ofs.begin(), ofs.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t b = tgt[i] == kExit ? static_cast<std::uint32_t>(n)
                                              : tgt[i];
            ++ofs[b + 1];
        }
        for (std::size_t b = 1; b < ofs.size(); ++b) ofs[b] += ofs[b - 1];
        {
            std::vector<std::uint32_t> cursor(ofs.begin(), ofs.end() - 1);
            for (std::size_t i = 0; i < n; ++i) {
                std::uint32_t b = tgt[i] == kExit ? static_cast<std::uint32_t>(n)
                                                  : tgt[i];
                entries[cursor[b]++] = static_cast<std::uint32_t>(i);
            }
        }

        const std::vector<Real>& src = out;
        std::vector<Real>& dst = scratch;
        pool.run(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t j = lo; j < hi; ++j) {
                mpfr_ptr acc = mp(dst[j]);
                if (has_id) mpfr_mul(acc, mp(f_id), mp(src[j]), MPFR_RNDN);
                else mpfr_set_zero(acc, 1);
                for (std::uint32_t e = ofs[j]; e < ofs[j + 1]; ++e)
                    mpfr_fma(acc, mp(f_mv), mp(src[entries[e]]), acc, MPFR_RNDN);
            }
        });
        if (sink) {
            for (std::uint32_t e = ofs[n]; e < ofs[n + 1]; ++e) {
                Real t = f_mv * src[entries[e]];
                *sink += t;
            }
        }
        std::swap(out, scratch);
    }
}

EigenResult TransferOperator::leading_eigenvalue(const BondWeight& w,
                                                 const Precision& prec,
                                                 const WeightVector* init,
                                                 const WorkerPool& pool,
                                                 std::uint64_t iter_cap) const {
    const std::size_t n = space_.size();
    set_working_digits(prec.digits + 10);
    const Real delta = at_working(prec.delta);

    std::vector<Real> cur(n, Real(0)), next(n, Real(0));
    bool seeded = false;
    if (init && init->space == &space_ && init->entries.size() == n) {
        Real sup = 0;
        for (const auto& x : init->entries)
            if (x > sup) sup = x;
        if (sup > 0) {
            Real inv = 1 / sup;
            for (std::size_t i = 0; i < n; ++i)
                cur[i] = at_working(init->entries[i]) * inv;
            seeded = true;
        }
    }
    if (!seeded) cur[0] = 1;

    Real lambda_prev = -1;
    Real lambda = 0;
    std::uint64_t iters = 0;
    while (true) {
        apply_row(cur, next, w, prec, pool);
        ++iters;

        std::size_t sup_at = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (next[i] > next[sup_at]) sup_at = i;
        Real sup = next[sup_at];
        if (sup == 0) {
            EigenResult r;
            r.lambda = 0;
            r.vector.space = &space_;
            r.vector.entries = std::move(next);
            r.iterations = iters;
            return r;
        }

        // cur enters normalized to sup-norm 1
        if (cur[0] > Real(1e-10)) lambda = next[0] / cur[0];
        else lambda = sup;

        Real inv = 1 / sup;
        pool.run(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i)
                mpfr_mul(mp(next[i]), mp(next[i]), mp(inv), MPFR_RNDN);
        });
        std::swap(cur, next);

        if (lambda_prev >= 0) {
            Real diff = abs(lambda - lambda_prev);
            if (diff <= delta * lambda) break;
        }
        lambda_prev = lambda;
        if (iters >= iter_cap)
            throw nonconvergence_error(
                "power iteration did not converge: last estimates " +
                to_decimal_string(lambda_prev, 30) + ", " +
                to_decimal_string(lambda, 30));
    }

    EigenResult r;
    r.lambda = lambda;
    r.vector.space = &space_;
    r.vector.entries = std::move(cur);
    r.iterations = iters;
    return r;
}

} // namespace critpoly
