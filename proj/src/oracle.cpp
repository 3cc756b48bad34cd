#include "critpoly/oracle.hpp"

#include <array>
#include <map>
#include <sstream>
#include <thread>

#include "critpoly/errors.hpp"

namespace critpoly {

Real CriticalPolynomial::eval(const Real& p) const {
    Real acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
        acc = acc * p + Real(it->str());
    return acc;
}

CriticalPolynomial CriticalPolynomial::derivative() const {
    CriticalPolynomial d;
    for (std::size_t k = 1; k < coefficients.size(); ++k)
        d.coefficients.push_back(coefficients[k] * static_cast<long>(k));
    return d;
}

namespace {

// union-find with per-vertex displacement to the root, plus a winding
// subgroup per root kept as up to two independent vectors
struct WindingForest {
    std::vector<int> parent;
    std::vector<std::array<long, 2>> disp; // displacement to parent
    std::vector<std::array<long, 4>> gens; // two generator vectors per root
    std::vector<std::uint8_t> rank;        // winding rank per root

    void reset(int n) {
        parent.assign(n, -1);
        disp.assign(n, {0, 0});
        gens.assign(n, {0, 0, 0, 0});
        rank.assign(n, 0);
    }

    // root of v, accumulating displacement to it
    int find(int v, std::array<long, 2>& d) {
        d = {0, 0};
        while (parent[v] >= 0) {
            d[0] += disp[v][0];
            d[1] += disp[v][1];
            v = parent[v];
        }
        return v;
    }

    void add_loop(int root, long lx, long ly) {
        if (lx == 0 && ly == 0) return;
        auto& g = gens[root];
        if (rank[root] == 0) {
            g[0] = lx;
            g[1] = ly;
            rank[root] = 1;
            return;
        }
        if (rank[root] == 1) {
            if (g[0] * ly - g[1] * lx != 0) {
                g[2] = lx;
                g[3] = ly;
                rank[root] = 2;
            }
        }
    }

    void unite(int u, int v, int dx, int dy) {
        std::array<long, 2> du, dv;
        int ru = find(u, du);
        int rv = find(v, dv);
        if (ru == rv) {
            // loop vector of the closed circuit through this edge
            add_loop(ru, du[0] + dx - dv[0], du[1] + dy - dv[1]);
            return;
        }
        // attach rv under ru such that disp(v->ru) = disp(u->ru) + (dx,dy)
        parent[rv] = ru;
        disp[rv] = {du[0] + dx - dv[0], du[1] + dy - dv[1]};
        if (rank[rv] > 0) {
            add_loop(ru, gens[rv][0], gens[rv][1]);
            if (rank[rv] == 2) add_loop(ru, gens[rv][2], gens[rv][3]);
        }
    }
};

} // namespace

SubsetClass classify(const TorusBasis& basis, std::uint32_t open_mask) {
    thread_local WindingForest forest;
    forest.reset(basis.vertices);
    for (std::size_t e = 0; e < basis.edges.size(); ++e) {
        if (!(open_mask >> e & 1u)) continue;
        const auto& ed = basis.edges[e];
        forest.unite(ed.u, ed.v, ed.wx, ed.wy);
    }
    bool any_winding = false;
    for (int v = 0; v < basis.vertices; ++v) {
        if (forest.parent[v] >= 0) continue;
        if (forest.rank[v] == 2) return SubsetClass::two_d;
        if (forest.rank[v] > 0) any_winding = true;
    }
    return any_winding ? SubsetClass::other : SubsetClass::zero_d;
}

CriticalPolynomial critical_polynomial(const TorusBasis& basis, int edge_cap,
                                       int workers) {
    const int E = static_cast<int>(basis.edges.size());
    if (E > edge_cap)
        throw capacity_error("basis has " + std::to_string(E) +
                                 " edges, above the enumeration cap of " +
                                 std::to_string(edge_cap),
                             static_cast<unsigned long long>(E));
    if (E > 30) throw capacity_error("enumeration beyond 2^30 unsupported",
                                     static_cast<unsigned long long>(E));
    const std::uint64_t total = 1ull << E;

    // per-|S| counts of 2D and 0D events; exact integer accumulators make
    // the parallel reduction order-independent
    const int nthreads = workers < 1 ? 1 : workers;
    std::vector<std::vector<std::uint64_t>> c2(nthreads),
        c0(nthreads);
    auto work = [&](int t, std::uint64_t lo, std::uint64_t hi) {
        auto& mine2 = c2[t];
        auto& mine0 = c0[t];
        mine2.assign(E + 1, 0);
        mine0.assign(E + 1, 0);
        for (std::uint64_t m = lo; m < hi; ++m) {
            SubsetClass cls = classify(basis, static_cast<std::uint32_t>(m));
            if (cls == SubsetClass::other) continue;
            int k = __builtin_popcountll(m);
            if (cls == SubsetClass::two_d) ++mine2[k];
            else ++mine0[k];
        }
    };
    if (nthreads == 1) {
        work(0, 0, total);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < nthreads; ++t)
            threads.emplace_back(work, t, total * t / nthreads,
                                 total * (t + 1) / nthreads);
        for (auto& th : threads) th.join();
    }
    std::vector<long long> diff(E + 1, 0);
    for (int t = 0; t < nthreads; ++t)
        for (int k = 0; k <= E; ++k)
            diff[k] += static_cast<long long>(c2[t][k]) -
                       static_cast<long long>(c0[t][k]);

    // P(p) = sum_k diff[k] p^k (1-p)^(E-k), expanded exactly
    std::vector<std::vector<BigInt>> binom(E + 1, std::vector<BigInt>(E + 1, 0));
    for (int i = 0; i <= E; ++i) {
        binom[i][0] = 1;
        for (int j = 1; j <= i; ++j)
            binom[i][j] = binom[i - 1][j - 1] + (j <= i - 1 ? binom[i - 1][j] : 0);
    }
    CriticalPolynomial poly;
    poly.coefficients.assign(E + 1, 0);
    for (int k = 0; k <= E; ++k) {
        if (diff[k] == 0) continue;
        for (int j = 0; j <= E - k; ++j) {
            BigInt term = binom[E - k][j] * diff[k];
            if (j % 2) term = -term;
            poly.coefficients[k + j] += term;
        }
    }
    while (poly.coefficients.size() > 1 && poly.coefficients.back() == 0)
        poly.coefficients.pop_back();
    return poly;
}

Real root_in_unit_interval(const CriticalPolynomial& poly, int digits) {
    set_working_digits(digits + 10);
    const int grid = 1024;
    int sign_changes = 0;
    Real lo = 0, hi = 0;
    Real prev = poly.eval(Real(0));
    Real prev_x = 0;
    for (int k = 1; k <= grid; ++k) {
        Real x = Real(k) / grid;
        Real fx = poly.eval(x);
        if ((prev < 0 && fx > 0) || (prev > 0 && fx < 0) || fx == 0) {
            ++sign_changes;
            lo = prev_x;
            hi = x;
            if (fx == 0) lo = hi = x;
        }
        prev = fx;
        prev_x = x;
    }
    if (sign_changes != 1)
        throw invalid_input_error(
            "polynomial has " + std::to_string(sign_changes) +
            " sign changes in (0,1); expected exactly one");
    if (lo == hi) return lo;

    Real flo = poly.eval(lo);
    int iters = static_cast<int>((digits + 5) * 3.33) + 8;
    for (int i = 0; i < iters; ++i) {
        Real mid = (lo + hi) / 2;
        Real fm = poly.eval(mid);
        if (fm == 0) return mid;
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

namespace {

struct CellGraph {
    int sites = 0;
    std::vector<TorusBasis::Edge> edges; // wx, wy in unit-cell steps
};

CellGraph cell_graph(const std::string& lattice) {
    CellGraph g;
    auto E = [&](int u, int v, int dx, int dy) {
        g.edges.push_back({u, v, dx, dy});
    };
    if (lattice == "square") {
        g.sites = 1;
        E(0, 0, 1, 0);
        E(0, 0, 0, 1);
    } else if (lattice == "triangular") {
        g.sites = 1;
        E(0, 0, 1, 0);
        E(0, 0, 0, 1);
        E(0, 0, 1, -1);
    } else if (lattice == "hexagonal") {
        g.sites = 2; // a=0, b=1
        E(0, 1, 0, 0);
        E(0, 1, -1, 0);
        E(0, 1, -1, 1);
    } else if (lattice == "kagome") {
        g.sites = 3; // u=0, v=1, w=2
        E(0, 1, 0, 0);
        E(0, 2, 0, 0);
        E(1, 2, 0, 0);
        E(2, 1, 1, 0);
        E(2, 0, 0, 1);
        E(1, 0, -1, 1);
    } else if (lattice == "four-eight") {
        g.sites = 4; // N=0, E=1, S=2, W=3
        E(0, 1, 0, 0);
        E(1, 2, 0, 0);
        E(2, 3, 0, 0);
        E(3, 0, 0, 0);
        E(1, 3, 1, 0); // E - W(next)
        E(0, 2, 0, 1); // N - S(above)
    } else if (lattice == "frieze") {
        g.sites = 2; // a=0 (square-band row), b=1 (triangle-band row)
        E(0, 0, 1, 0);
        E(1, 1, 1, 0);
        E(0, 1, 0, 0);
        E(1, 0, 0, 1);
        E(1, 0, 1, 1); // band diagonal
    } else if (lattice == "three-twelve") {
        g.sites = 6; // aw,ae,au = 0..2 (up triangle), bw,be,bd = 3..5 (down)
        E(0, 1, 0, 0);
        E(0, 2, 0, 0);
        E(1, 2, 0, 0);
        E(3, 4, 0, 0);
        E(3, 5, 0, 0);
        E(4, 5, 0, 0);
        E(1, 3, 0, 0);  // ae - bw
        E(4, 0, 1, 0);  // be - aw(next)
        E(2, 5, -1, 1); // au - bd
    } else if (lattice == "snub-square") {
        g.sites = 4; // s00=0, s10=1, s01=2, s11=3 on the 2x2 block
        E(0, 1, 0, 0);
        E(1, 0, 1, 0);
        E(2, 3, 0, 0);
        E(3, 2, 1, 0);
        E(0, 2, 0, 0);
        E(2, 0, 0, 1);
        E(1, 3, 0, 0);
        E(3, 1, 0, 1);
        E(0, 3, 0, 0);  // "/" on the both-even face
        E(2, 1, -1, 1); // "\" on the both-odd face
    } else if (lattice == "snub-hexagonal") {
        // triangular sites x = 1..6 of a (7,0) x (2,1) cell; x = 0 removed
        g.sites = 6;
        auto site = [](int x) { return x - 1; }; // labels 0..5 for x=1..6
        for (int x = 1; x <= 6; ++x) {
            const int off[3][2] = {{1, 0}, {0, 1}, {1, -1}};
            for (auto& d : off) {
                int tx = x + d[0] * 1 + d[1] * 0; // triangular coords
                int ty = d[0] * 0 + d[1] * 1;
                // map (tx, ty) = (x', 0) + d1*(7,0) + d2*(2,1)
                int d2 = ty;
                int xr = tx - 2 * ty;
                int d1 = 0;
                while (xr < 0) { xr += 7; --d1; }
                while (xr >= 7) { xr -= 7; ++d1; }
                if (xr == 0) continue; // removed end
                g.edges.push_back({site(x), site(xr), d1, d2});
            }
        }
    } else if (lattice == "ruby") {
        g.sites = 6; // a: B=0, TL=1, TR=2; b: T=3, BL=4, BR=5
        E(0, 1, 0, 0);
        E(0, 2, 0, 0);
        E(1, 2, 0, 0);
        E(3, 4, 0, 0);
        E(3, 5, 0, 0);
        E(4, 5, 0, 0);
        E(0, 4, 0, 0); // B - BL (a east side, lower link)
        E(2, 3, 0, 0); // TR - T (a east side, upper link)
        E(5, 0, 1, 0); // BR - B(next)
        E(3, 1, 1, 0); // T - TL(next)
        E(1, 4, 0, 1); // TL - BL(above)
        E(2, 5, 0, 1); // TR - BR(above)
    } else if (lattice == "cross") {
        // v: se=0,e=1,nw=2,w=3; u: sw=4,se=5,ne=6,nw=7; w: e=8,ne=9,w=10,sw=11
        g.sites = 12;
        E(0, 1, 0, 0);
        E(1, 2, 0, 0);
        E(2, 3, 0, 0);
        E(3, 0, 0, 0);
        E(4, 5, 0, 0);
        E(5, 6, 0, 0);
        E(6, 7, 0, 0);
        E(7, 4, 0, 0);
        E(8, 9, 0, 0);
        E(9, 10, 0, 0);
        E(10, 11, 0, 0);
        E(11, 8, 0, 0);
        E(7, 0, 0, 0);   // u_nw - v_se
        E(6, 11, 0, 0);  // u_ne - w_sw
        E(1, 10, 0, 0);  // v_e - w_w
        E(8, 3, 1, 0);   // w_e - v_w(next)
        E(4, 9, 0, -1);  // u_sw - w_ne(below)
        E(5, 2, 1, -1);  // u_se - v_nw(+1,-1)
    } else {
        throw invalid_input_error("no oracle cell for lattice: " + lattice);
    }
    return g;
}

} // namespace

TorusBasis torus_basis(const std::string& lattice, int cx, int cy) {
    if (cx < 1 || cy < 1)
        throw invalid_input_error("basis cell counts must be >= 1");
    CellGraph g = cell_graph(lattice);
    TorusBasis b;
    b.provenance = lattice + " " + std::to_string(cx) + "x" + std::to_string(cy);
    b.vertices = g.sites * cx * cy;
    auto vid = [&](int s, int i, int j) { return (j * cx + i) * g.sites + s; };
    for (int j = 0; j < cy; ++j)
        for (int i = 0; i < cx; ++i)
            for (const auto& e : g.edges) {
                int ti = i + e.wx, tj = j + e.wy;
                int wx = 0, wy = 0;
                while (ti < 0) { ti += cx; --wx; }
                while (ti >= cx) { ti -= cx; ++wx; }
                while (tj < 0) { tj += cy; --wy; }
                while (tj >= cy) { tj -= cy; ++wy; }
                b.edges.push_back({vid(e.u, i, j), vid(e.v, ti, tj), wx, wy});
            }
    return b;
}

TorusBasis parse_basis_file(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, int> ids;
    TorusBasis b;
    b.provenance = "file";
    std::vector<std::array<std::string, 2>> pending_names;
    std::vector<std::array<int, 2>> pending_winds;
    while (std::getline(in, line)) {
        ++lineno;
        auto h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "vertex") {
            std::string name;
            if (!(ls >> name))
                throw invalid_input_error("basis line " + std::to_string(lineno) +
                                          ": vertex needs an id");
            if (!ids.emplace(name, b.vertices).second)
                throw invalid_input_error("basis line " + std::to_string(lineno) +
                                          ": duplicate vertex " + name);
            ++b.vertices;
        } else if (kw == "edge") {
            std::string u, v;
            int wx, wy;
            if (!(ls >> u >> v >> wx >> wy))
                throw invalid_input_error("basis line " + std::to_string(lineno) +
                                          ": edge needs <u> <v> <wx> <wy>");
            pending_names.push_back({u, v});
            pending_winds.push_back({wx, wy});
        } else {
            throw invalid_input_error("basis line " + std::to_string(lineno) +
                                      ": unrecognized keyword " + kw);
        }
    }
    for (std::size_t k = 0; k < pending_names.size(); ++k) {
        auto iu = ids.find(pending_names[k][0]);
        auto iv = ids.find(pending_names[k][1]);
        if (iu == ids.end() || iv == ids.end())
            throw invalid_input_error("basis edge references unknown vertex");
        b.edges.push_back({iu->second, iv->second, pending_winds[k][0],
                           pending_winds[k][1]});
    }
    if (b.vertices == 0) throw invalid_input_error("basis has no vertices");
    return b;
}

std::string polynomial_to_string(const CriticalPolynomial& poly) {
    std::ostringstream os;
    os << "[";
    for (std::size_t k = 0; k < poly.coefficients.size(); ++k) {
        if (k) os << ", ";
        os << poly.coefficients[k].str();
    }
    os << "]";
    return os.str();
}

} // namespace critpoly
