#include "critpoly/extrapolate.hpp"

#include <algorithm>
#include <sstream>

#include "critpoly/errors.hpp"

namespace critpoly {

namespace {

void check_increasing(const Series& s) {
    for (std::size_t i = 1; i < s.points.size(); ++i)
        if (s.points[i].first <= s.points[i - 1].first)
            throw invalid_input_error("series widths must be strictly increasing");
}

// dense Gaussian elimination with partial pivoting; a is m x (m+1)
std::vector<Real> solve_linear(std::vector<std::vector<Real>> a) {
    const std::size_t m = a.size();
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (abs(a[r][col]) > abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0)
            throw invalid_input_error("singular system in scaling fit");
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            Real f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<Real> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = a[i][m] / a[i][i];
    return x;
}

// least-squares fit of y ~ sum_k c_k basis_k(x) via normal equations
std::vector<Real> least_squares(const std::vector<std::vector<Real>>& design,
                                const std::vector<Real>& y) {
    const std::size_t rows = design.size();
    const std::size_t cols = design[0].size();
    std::vector<std::vector<Real>> nrm(cols, std::vector<Real>(cols + 1, Real(0)));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t a = 0; a < cols; ++a) {
            for (std::size_t b = 0; b < cols; ++b)
                nrm[a][b] += design[i][a] * design[i][b];
            nrm[a][cols] += design[i][a] * y[i];
        }
    return solve_linear(std::move(nrm));
}

} // namespace

Series ratio_series(const Series& s) {
    check_increasing(s);
    Series q;
    q.provenance = "ratio of " + s.provenance;
    for (const auto& [n, pn] : s.points) {
        const Real* p1 = s.at(n - 1);
        const Real* p2 = s.at(n - 2);
        if (!p1 || !p2) continue;
        Real den = *p1 - *p2;
        if (den == 0)
            throw invalid_input_error("degenerate series: p(" +
                                      std::to_string(n - 1) + ") = p(" +
                                      std::to_string(n - 2) + ")");
        q.points.emplace_back(n, (pn - *p1) / den);
    }
    if (q.points.empty())
        throw invalid_input_error("ratio series needs three consecutive widths");
    return q;
}

Real solve_effective_exponent(const Real& q, int n, const Real& seed) {
    if (n < 3) throw invalid_input_error("effective exponent needs n >= 3");
    if (!(q > 0)) throw invalid_input_error("effective exponent needs q > 0");
    if (!(seed > 0)) throw invalid_input_error("effective exponent needs seed > 0");

    auto g = [&](const Real& d) -> Real {
        Real a = pow(Real(n), d);
        Real b = pow(Real(n - 1), d);
        Real c = pow(Real(n - 2), d);
        return pow(1 - Real(2) / n, d) * (a - b) / (b - c) - q;
    };
    // g is strictly decreasing in d; expand a bracket around the seed
    Real lo = seed, hi = seed;
    const Real dmax = 30;
    while (g(lo) < 0) {
        lo /= 2;
        if (lo < Real("1e-8"))
            throw invalid_input_error("no effective exponent in (0,30]");
    }
    while (g(hi) > 0) {
        hi *= 2;
        if (hi > dmax) {
            hi = dmax;
            if (g(hi) > 0)
                throw invalid_input_error("no effective exponent in (0,30]");
            break;
        }
    }
    // bisection to 30 digits
    for (int it = 0; it < 140; ++it) {
        Real mid = (lo + hi) / 2;
        if (g(mid) > 0) lo = mid;
        else hi = mid;
        if (hi - lo < Real("1e-32") * (1 + abs(hi))) break;
    }
    return (lo + hi) / 2;
}

Series eliminate_leading(const Series& s, const Real& delta) {
    check_increasing(s);
    if (!(delta > 0)) throw invalid_input_error("eliminate_leading: delta > 0");
    Series out;
    out.provenance = s.provenance + " minus leading term";
    for (const auto& [n, pn] : s.points) {
        const Real* p1 = s.at(n - 1);
        if (!p1) continue;
        Real wn = pow(Real(n), -delta);
        Real wm = pow(Real(n - 1), -delta);
        Real den = wn - wm;
        if (den == 0) throw invalid_input_error("degenerate elimination weights");
        out.points.emplace_back(n, pn - wn * (pn - *p1) / den);
    }
    if (out.points.empty())
        throw invalid_input_error("eliminate_leading needs two consecutive widths");
    return out;
}

std::pair<Real, Real> fit_exponent_limit(const Series& deltas,
                                         const std::vector<int>& orders,
                                         const std::vector<int>& windows) {
    check_increasing(deltas);
    const auto& pts = deltas.points;
    struct V {
        int order, window;
        Real intercept;
    };
    std::vector<V> variants;
    for (int w : windows) {
        if (w > static_cast<int>(pts.size())) continue;
        for (int o : orders) {
            if (o + 1 > w) continue; // under-determined variant: skipped
            std::vector<std::vector<Real>> design;
            std::vector<Real> y;
            for (std::size_t i = pts.size() - w; i < pts.size(); ++i) {
                Real x = Real(1) / pts[i].first;
                std::vector<Real> row(o + 1);
                row[0] = 1;
                for (int k = 1; k <= o; ++k) row[k] = row[k - 1] * x;
                design.push_back(std::move(row));
                y.push_back(pts[i].second);
            }
            try {
                auto c = least_squares(design, y);
                variants.push_back({o, w, c[0]});
            } catch (const invalid_input_error&) {
                continue; // singular variant: skipped
            }
        }
    }
    if (variants.empty())
        throw invalid_input_error("no admissible exponent-fit variant");
    // central: highest order at the largest admissible window
    const V* central = &variants[0];
    for (const auto& v : variants)
        if (v.window > central->window ||
            (v.window == central->window && v.order > central->order))
            central = &v;
    Real err = 0;
    for (const auto& v : variants) {
        Real d = abs(v.intercept - central->intercept);
        if (d > err) err = d;
    }
    return {central->intercept, err};
}

ScalingFit extrapolate_pc(const Series& s, const std::vector<Real>& exponents,
                          const std::vector<int>& term_counts,
                          const std::vector<int>& windows) {
    check_increasing(s);
    for (std::size_t k = 1; k < exponents.size(); ++k)
        if (!(exponents[k] > exponents[k - 1]))
            throw invalid_input_error("exponents must be strictly increasing");
    const auto& pts = s.points;

    auto run_variant = [&](int terms, int window,
                           const std::vector<Real>& expo) -> std::vector<Real> {
        std::vector<std::vector<Real>> design;
        std::vector<Real> y;
        for (std::size_t i = pts.size() - window; i < pts.size(); ++i) {
            std::vector<Real> row(terms + 1);
            row[0] = 1;
            for (int k = 0; k < terms; ++k)
                row[k + 1] = pow(Real(pts[i].first), -expo[k]);
            design.push_back(std::move(row));
            y.push_back(pts[i].second);
        }
        return least_squares(design, y); // [pc, A1..AK]
    };

    ScalingFit fit;
    fit.exponents = exponents;
    for (int K : term_counts) {
        if (K < 1 || K > static_cast<int>(exponents.size())) continue;
        for (int w : windows) {
            if (w > static_cast<int>(pts.size()) || w < K + 1) continue;
            try {
                auto c = run_variant(K, w, exponents);
                fit.variants.push_back({K, w, c[0]});
            } catch (const invalid_input_error&) {
                continue;
            }
        }
    }
    if (fit.variants.empty())
        throw invalid_input_error("no admissible scaling-fit variant");

    // stable term count: smallest cross-window spread of pc
    int best_K = -1;
    Real best_spread = 0;
    for (int K : term_counts) {
        Real lo, hi;
        bool any = false;
        for (const auto& v : fit.variants) {
            if (v.terms != K) continue;
            if (!any) { lo = hi = v.pc; any = true; }
            else {
                if (v.pc < lo) lo = v.pc;
                if (v.pc > hi) hi = v.pc;
            }
        }
        if (!any) continue;
        Real spread = hi - lo;
        if (best_K < 0 || spread < best_spread) {
            best_K = K;
            best_spread = spread;
        }
    }
    const ScalingFit::Variant* central = nullptr;
    for (const auto& v : fit.variants)
        if (v.terms == best_K && (!central || v.window > central->window))
            central = &v;

    auto coef = run_variant(central->terms, central->window, exponents);
    fit.pc_limit = coef[0];
    fit.amplitudes.assign(coef.begin() + 1, coef.end());
    Real err = 0;
    for (const auto& v : fit.variants) {
        if (v.terms < best_K - 1 || v.terms > best_K + 1) continue;
        Real d = abs(v.pc - fit.pc_limit);
        if (d > err) err = d;
    }
    fit.error = err;

    // robustness: shift the high exponents and re-run the central variant
    fit.perturbation_shift = 0;
    if (central->terms >= 4) {
        std::vector<Real> pert = exponents;
        for (std::size_t k = 3; k < pert.size(); ++k) pert[k] += Real("0.25");
        try {
            auto c2 = run_variant(central->terms, central->window, pert);
            fit.perturbation_shift = abs(c2[0] - fit.pc_limit);
        } catch (const invalid_input_error&) {
        }
    }

    std::ostringstream vs;
    vs << "central terms=" << central->terms << " window=" << central->window
       << "; " << fit.variants.size() << " variants; error from terms in ["
       << best_K - 1 << "," << best_K + 1 << "]";
    fit.variants_used = vs.str();
    return fit;
}

std::vector<int> default_scaling_exponents(const std::string& lattice,
                                           int count) {
    bool class_a = lattice == "kagome" || lattice == "three-twelve" ||
                   lattice == "snub-hexagonal";
    std::vector<int> out;
    for (int k = 0; k < count; ++k)
        out.push_back(class_a ? 6 + k : 4 + 2 * k);
    return out;
}

Series parse_series_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    Series s;
    s.provenance = "csv";
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!header_seen) {
            std::string h = line;
            h.erase(std::remove_if(h.begin(), h.end(), ::isspace), h.end());
            if (h != "n,p_c")
                throw invalid_input_error("series csv line 1: expected header n,p_c");
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw invalid_input_error("series csv line " + std::to_string(lineno) +
                                      ": expected n,p_c");
        try {
            int n = std::stoi(line.substr(0, comma));
            Real p(line.substr(comma + 1));
            s.points.emplace_back(n, p);
        } catch (const std::exception&) {
            throw invalid_input_error("series csv line " + std::to_string(lineno) +
                                      ": malformed row");
        }
    }
    if (s.points.empty()) throw invalid_input_error("series csv has no rows");
    check_increasing(s);
    return s;
}

std::string series_to_csv(const Series& s, int digits) {
    std::ostringstream out;
    out << "n,p_c\n";
    for (const auto& [n, p] : s.points)
        out << n << "," << to_decimal_string(p, digits) << "\n";
    return out.str();
}

} // namespace critpoly
