#include "critpoly/lattice.hpp"

#include <map>
#include <sstream>

#include "critpoly/errors.hpp"

namespace critpoly {

Real ExactThreshold::value(int digits) const {
    set_working_digits(digits + 10);
    auto eval = [&](const Real& p) {
        Real acc = 0;
        for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * p + *it;
        return acc;
    };
    // unique root in (0,1): bracket by coarse scan, then bisect
    Real lo = 0, hi = 1;
    const int grid = 64;
    Real flo = eval(Real(1) / grid);
    lo = Real(1) / grid;
    for (int k = 2; k < grid; ++k) {
        Real x = Real(k) / grid;
        Real fx = eval(x);
        if (flo * fx <= 0) { hi = x; break; }
        lo = x;
        flo = fx;
    }
    int iters = static_cast<int>((digits + 5) * 3.33) + 4;
    for (int i = 0; i < iters; ++i) {
        Real mid = (lo + hi) / 2;
        Real fm = eval(mid);
        if (fm == 0) return mid;
        if (flo * fm < 0) hi = mid;
        else { lo = mid; flo = fm; }
    }
    return (lo + hi) / 2;
}

namespace {

CellStep V(int a, BondClass cls = BondClass::bond) {
    CellStep s;
    s.type = StepType::V;
    s.cls = cls;
    s.a = a;
    return s;
}
CellStep Vn(int a, BondClass cls = BondClass::bond) {
    CellStep s = V(a, cls);
    s.a_next = true;
    return s;
}
CellStep H(int a, int b, BondClass cls = BondClass::bond) {
    CellStep s;
    s.type = StepType::H;
    s.cls = cls;
    s.a = a;
    s.b = b;
    return s;
}
CellStep Hn(int a, int b, BondClass cls = BondClass::bond) {
    // b refers to the next cell's strand
    CellStep s = H(a, b, cls);
    s.b_next = true;
    return s;
}

ProgramItem ring(std::vector<CellStep> steps, int offset = 0) {
    ProgramItem it;
    it.kind = ItemKind::ring;
    it.offset = offset;
    it.steps = std::move(steps);
    return it;
}
ProgramItem block(std::vector<CellStep> steps, int offset = 0) {
    ProgramItem it;
    it.kind = ItemKind::block;
    it.offset = offset;
    it.steps = std::move(steps);
    return it;
}

LatticeSpec make_square() {
    LatticeSpec s;
    s.name = "square";
    s.program.width_per_cell = 1;
    s.program.items = {ring({V(0)}), ring({H(0, 0)})};
    s.program.items[1].steps[0].b_next = true;
    s.exact_threshold = ExactThreshold{{-1, 2}, "self-dual point, root of 2p-1"};
    return s;
}

LatticeSpec make_triangular() {
    // Helical sweep: per cell, the previous row's ring bond, the vertical
    // bond, and the up-left diagonal. Diagonal chains wind the cylinder,
    // so a straight-cut cell-by-cell order is forced into a one-row pitch.
    LatticeSpec s;
    s.name = "triangular";
    s.program.width_per_cell = 1;
    s.program.items = {block({Hn(0, 0), V(0), Hn(0, 0)})};
    s.exact_threshold = ExactThreshold{{1, -3, 0, 1}, "root of p^3-3p+1 in (0,1)"};
    return s;
}

LatticeSpec make_hexagonal() {
    // Brick-wall drawing, two lattice rows per program; vertical bonds
    // alternate between the two columns of the cell.
    LatticeSpec s;
    s.name = "hexagonal";
    s.program.width_per_cell = 2;
    s.program.items = {
        ring({V(0)}), ring({V(1, BondClass::forced_closed)}),
        ring({H(0, 1)}), ring({Hn(1, 0)}),
        ring({V(0, BondClass::forced_closed)}), ring({V(1)}),
        ring({H(0, 1)}), ring({Hn(1, 0)}),
    };
    s.exact_threshold = ExactThreshold{{1, 0, -3, 1}, "root of p^3-3p^2+1 in (0,1)"};
    return s;
}

LatticeSpec make_kagome() {
    // Strand 0 carries the v-sites, strand 1 the w/u chain (u is the
    // mid-band site; strand 1 advances twice per row). Straight cylinder.
    LatticeSpec s;
    s.name = "kagome";
    s.program.width_per_cell = 2;
    s.program.items = {
        ring({Hn(1, 0)}),                       // w(c,r) - v(c+1,r)
        ring({V(1)}),                           // w -> u
        ring({Hn(1, 0)}),                       // u(c,r+1) - v(c+1,r)
        ring({V(0, BondClass::forced_closed)}), // retire v(c,r)
        ring({H(0, 1)}),                        // v - u
        ring({V(1)}),                           // u -> w
        ring({H(0, 1)}),                        // v - w
    };
    return s;
}

LatticeSpec make_four_eight() {
    // One diamond square per cell (corners N,E,S,W), linked horizontally
    // E-W and vertically N-S. Strand 0 carries S/W/N, strand 1 carries E.
    LatticeSpec s;
    s.name = "four-eight";
    s.program.width_per_cell = 2;
    s.program.items = {
        ring({V(0)}),                           // N -> S (vertical link)
        ring({V(1, BondClass::forced_closed)}), // discard spent E
        ring({H(0, 1, BondClass::forced_open)}),// alias strand 1 to S
        ring({V(0)}),                           // S -> W
        ring({V(1)}),                           // S -> E
        ring({Hn(1, 0)}),                       // E(c) - W(c+1) link
        ring({V(0)}),                           // W -> N
        ring({H(0, 1)}),                        // N - E
    };
    return s;
}

LatticeSpec make_frieze() {
    // Elongated triangular: alternating square and triangle bands, each a
    // helical one-row sweep (triangle-band diagonals wind the cylinder).
    LatticeSpec s;
    s.name = "frieze";
    s.program.width_per_cell = 1;
    s.program.items = {
        block({Hn(0, 0), V(0)}),           // square band
        block({Hn(0, 0), V(0), Hn(0, 0)}), // triangle band
    };
    return s;
}

LatticeSpec make_three_twelve() {
    // Truncated hexagonal: brick honeycomb with each vertex blown up into
    // a triangle. Slots per cell: 0 = A-column, 1/2 = B-column west/east.
    // Two lattice rows per program (A and B alternate up/down roles).
    LatticeSpec s;
    s.name = "three-twelve";
    s.program.width_per_cell = 3;
    s.program.items = {
        // row with A floating (up-type) and B fed from below
        ring({V(2)}),                            // u_B -> d_B (vertical link)
        ring({V(1, BondClass::forced_closed)}),
        ring({H(1, 2, BondClass::forced_open)}), // alias: d_B on slots 1,2
        ring({V(1)}),                            // d -> w_B
        ring({V(2)}),                            // d -> e_B
        ring({H(1, 2)}),                         // w_B - e_B
        ring({V(0, BondClass::forced_closed)}),  // fresh w_A
        ring({Hn(2, 0)}),                        // e_B(c) - w_A(c+1) link
        ring({V(1)}),                            // w_B -> e_A (link w_B-e_A)
        ring({H(0, 1)}),                         // w_A - e_A
        ring({V(0)}),                            // w_A -> u_A
        ring({H(0, 1)}),                         // u_A - e_A
        // mirrored row with A fed from below and B floating
        ring({V(0)}),                            // u_A -> d_A
        ring({V(1, BondClass::forced_closed)}),
        ring({H(0, 1, BondClass::forced_open)}),
        ring({V(0)}),                            // d -> w_A'
        ring({V(1)}),                            // d -> e_A'
        ring({H(0, 1)}),                         // w_A' - e_A'
        ring({V(1)}),                            // e_A' -> w_B' (link)
        ring({V(2, BondClass::forced_closed)}),  // fresh e_B'
        ring({H(1, 2)}),                         // w_B' - e_B'
        ring({Hn(2, 0)}),                        // e_B'(c) - w_A'(c+1) link
        ring({V(2)}),                            // e_B' -> u_B'
        ring({H(1, 2)}),                         // w_B' - u_B'
    };
    return s;
}

LatticeSpec make_snub_square() {
    // Square lattice plus one diagonal per checkerboard face, direction
    // alternating between the two diagonal-face classes. Strand 0 = even
    // column, strand 1 = odd column; two lattice rows per program.
    LatticeSpec s;
    s.name = "snub-square";
    s.parity = Parity::even;
    s.program.width_per_cell = 2;
    s.program.items = {
        ring({V(1)}),     // odd columns up
        ring({H(0, 1)}),  // "/" diagonal: (2c,y)-(2c+1,y+1)
        ring({V(0)}),     // even columns up
        ring({H(0, 1)}),  // row horizontals
        ring({Hn(1, 0)}),
        ring({V(1)}),
        ring({Hn(1, 0)}), // "\" diagonal: (2c+2,y)-(2c+1,y+1)
        ring({V(0)}),
        ring({H(0, 1)}),
        ring({Hn(1, 0)}),
    };
    return s;
}

LatticeSpec make_snub_hexagonal() {
    // Triangular lattice minus an efficient dominating set (one site in
    // seven, pattern x = 2y mod 7). The deleted diagonals break the
    // winding chains, so a straight cylinder works: per sweep, a ring of
    // the surviving row horizontals, then a framed V/diagonal sweep whose
    // frame offset tracks the deletion pattern (shift 2 per row).
    LatticeSpec s;
    s.name = "snub-hexagonal";
    s.parity = Parity::even;
    s.program.width_per_cell = 7;
    for (int y = 0; y < 7; ++y) {
        int off = (2 * y + 3) % 7;
        // ring bonds of row y: frame k=3 hits a removed right end,
        // k=4 a removed left end
        std::vector<CellStep> rg;
        for (int k = 0; k < 7; ++k) {
            if (k == 3 || k == 4) continue;
            rg.push_back(k == 6 ? Hn(6, 0) : H(k, k + 1));
        }
        s.program.items.push_back(ring(std::move(rg), off));
        // advance sweep: vertical bond absent where either end is removed
        // (k=4 old, k=6 new); diagonal (x,y+1)-(x+1,y) absent at k=3 (old
        // right end removed) and k=6 (new end removed, freeing the seam)
        std::vector<CellStep> bl;
        for (int k = 0; k < 7; ++k) {
            bl.push_back(V(k, (k == 4 || k == 6) ? BondClass::forced_closed
                                                 : BondClass::bond));
            if (k != 3 && k != 6) bl.push_back(H(k, k + 1));
        }
        s.program.items.push_back(block(std::move(bl), off));
    }
    return s;
}

LatticeSpec make_ruby() {
    // Rhombitrihexagonal: brick honeycomb with each vertex expanded into a
    // triangle and each honeycomb edge realized as two parallel links.
    // Slots 0,1 = a-column corner pair, slots 2,3 = b-column pair.
    LatticeSpec s;
    s.name = "ruby";
    s.parity = Parity::even;
    s.program.width_per_cell = 4;
    s.program.items = {
        // row with a = up-vertex (point-down triangle B,TL,TR),
        //          b = down-vertex (point-up triangle T,BL,BR)
        ring({V(2)}),                            // TL(b,y-1) -> BL(b,y) link
        ring({V(3)}),                            // TR(b,y-1) -> BR(b,y) link
        ring({H(2, 3)}),                         // side BL-BR
        ring({V(0, BondClass::forced_closed)}),
        ring({V(1, BondClass::forced_closed)}),
        ring({H(0, 1, BondClass::forced_open)}), // B-blob of a on slots 0,1
        ring({Hn(3, 0)}),                        // BR(b,c) - B(a,c+1) link
        ring({H(1, 2)}),                         // B(a,c) - BL(b,c) link
        ring({V(0)}),                            // B -> TL (side)
        ring({V(1)}),                            // B -> TR (side)
        ring({H(0, 1)}),                         // side TL-TR
        ring({V(2)}),                            // BL -> T (side)
        ring({H(1, 2)}),                         // TR(a) - T(b) link
        ring({H(2, 3)}),                         // side T-BR
        ring({V(3, BondClass::forced_closed)}),
        ring({H(2, 3, BondClass::forced_open)}), // alias T onto slot 3
        ring({Hn(3, 0)}),                        // T(b,c) - TL(a,c+1) link
        // mirrored row: a = down-vertex, b = up-vertex
        ring({V(0)}),
        ring({V(1)}),
        ring({H(0, 1)}),
        ring({V(2, BondClass::forced_closed)}),
        ring({V(3, BondClass::forced_closed)}),
        ring({H(2, 3, BondClass::forced_open)}),
        ring({H(1, 2)}),                         // BR(a,c) - B(b,c) link
        ring({Hn(3, 0)}),                        // B(b,c) - BL(a,c+1) link
        ring({V(2)}),                            // B -> TL
        ring({V(3)}),                            // B -> TR
        ring({H(2, 3)}),                         // side TL-TR
        ring({V(0)}),                            // BL -> T
        ring({H(0, 1)}),                         // side T-BR
        ring({Hn(3, 0)}),                        // TR(b,c) - T(a,c+1) link
        ring({V(1, BondClass::forced_closed)}),
        ring({H(0, 1, BondClass::forced_open)}), // alias T onto slot 1
        ring({H(1, 2)}),                         // T(a,c) - TL(b,c) link
    };
    return s;
}

LatticeSpec make_cross() {
    // Truncated trihexagonal: the kagome construction with every site
    // blown up into a square of corners, one corner per kagome bond.
    // Slots 0,1 = v-square, slots 2,3 = w/u-square.
    LatticeSpec s;
    s.name = "cross";
    s.parity = Parity::even;
    s.program.width_per_cell = 4;
    s.program.items = {
        ring({Hn(3, 0)}),                        // w_e(c) - v_w(c+1) link
        ring({V(3)}),                            // w_e -> w_ne (square edge)
        ring({H(2, 3)}),                         // w_w - w_ne (square edge)
        ring({V(3)}),                            // w_ne -> u_sw (w-u link)
        ring({V(2, BondClass::forced_closed)}),
        ring({H(2, 3, BondClass::forced_open)}), // u_sw blob on slots 2,3
        ring({V(3)}),                            // u_sw -> u_se (square edge)
        ring({V(0, BondClass::forced_closed)}),
        ring({H(0, 1, BondClass::forced_open)}), // alias v_nw westward
        ring({Hn(3, 0)}),                        // u_se(c) - v_nw(c+1) link
        ring({V(2)}),                            // u_sw -> u_nw (square edge)
        ring({V(0, BondClass::forced_closed)}),
        ring({V(1, BondClass::forced_closed)}),
        ring({H(0, 1, BondClass::forced_open)}), // new v-square se-blob
        ring({H(1, 2)}),                         // v_se - u_nw link
        ring({V(1)}),                            // se-blob -> v_e (square edge)
        ring({V(3)}),                            // u_se -> u_ne (square edge)
        ring({H(2, 3)}),                         // u_nw - u_ne (square edge)
        ring({V(3)}),                            // u_ne -> w_sw (u-w link)
        ring({V(2, BondClass::forced_closed)}),
        ring({H(2, 3, BondClass::forced_open)}), // w_sw blob on slots 2,3
        ring({V(2)}),                            // w_sw -> w_w (square edge)
        ring({H(1, 2)}),                         // v_e - w_w link
        ring({V(3)}),                            // w_sw -> w_e (square edge)
        ring({V(0)}),                            // se-blob -> v_w (square edge)
        ring({V(1)}),                            // v_e -> v_nw (square edge)
        ring({H(0, 1)}),                         // v_w - v_nw (square edge)
    };
    return s;
}

std::vector<LatticeSpec> build_catalog() {
    return {
        make_square(),     make_triangular(), make_hexagonal(),
        make_kagome(),     make_four_eight(), make_frieze(),
        make_three_twelve(), make_cross(),    make_snub_square(),
        make_snub_hexagonal(), make_ruby(),
    };
}

} // namespace

std::vector<LatticeSpec> catalog() {
    static const std::vector<LatticeSpec> cat = build_catalog();
    return cat;
}

const LatticeSpec& catalog_lattice(const std::string& name) {
    static const std::vector<LatticeSpec> cat = build_catalog();
    for (const auto& s : cat)
        if (s.name == name) return s;
    throw invalid_input_error("unknown lattice: " + name);
}

InstProgram instantiate(const LatticeSpec& spec, int n) {
    if (n < 1) throw invalid_input_error("width must be >= 1");
    if (spec.parity == Parity::even && n % 2 != 0)
        throw invalid_input_error("lattice " + spec.name +
                                  " is built at even widths only (got n=" +
                                  std::to_string(n) + ")");
    const int m = spec.program.width_per_cell;
    const int W = n * m;
    InstProgram prog;
    prog.lattice = spec.name;
    prog.width = W;

    auto emit = [&](const CellStep& cs, int cell, int offset) {
        long a_tot = static_cast<long>(cell) * m + offset + cs.a + (cs.a_next ? m : 0);
        Step st;
        st.type = cs.type;
        st.cls = cs.cls;
        st.a = static_cast<std::uint32_t>(a_tot % W);
        if (cs.type == StepType::H) {
            long b_tot = static_cast<long>(cell) * m + offset + cs.b + (cs.b_next ? m : 0);
            if (b_tot != a_tot + 1)
                throw invalid_input_error(
                    "H step must name an eastward-adjacent pair (lattice " +
                    spec.name + ")");
            st.b = static_cast<std::uint32_t>(b_tot % W);
            st.seam = static_cast<std::int8_t>(b_tot / W - a_tot / W);
        }
        prog.steps.push_back(st);
    };

    for (const auto& item : spec.program.items) {
        if (item.kind == ItemKind::ring) {
            for (const auto& cs : item.steps)
                for (int c = 0; c < n; ++c) emit(cs, c, item.offset);
        } else {
            for (int c = 0; c < n; ++c)
                for (const auto& cs : item.steps) emit(cs, c, item.offset);
        }
    }

    std::vector<int> advanced(W, 0);
    for (const auto& st : prog.steps)
        if (st.type == StepType::V) advanced[st.a]++;
    for (int i = 0; i < W; ++i)
        if (advanced[i] == 0)
            throw invalid_input_error("strand " + std::to_string(i) +
                                      " never advances (lattice " + spec.name + ")");
    return prog;
}

namespace {

std::string class_suffix(BondClass c) {
    switch (c) {
        case BondClass::forced_open: return " open";
        case BondClass::forced_closed: return " closed";
        default: return "";
    }
}

std::string step_line(const CellStep& cs) {
    std::ostringstream os;
    if (cs.type == StepType::V) {
        os << "V " << cs.a << (cs.a_next ? "+" : "");
    } else {
        os << "H " << cs.a << (cs.a_next ? "+" : "") << " " << cs.b
           << (cs.b_next ? "+" : "");
    }
    os << class_suffix(cs.cls);
    return os.str();
}

} // namespace

std::string serialize(const LatticeSpec& spec) {
    std::ostringstream os;
    os << "lattice " << spec.name << " parity="
       << (spec.parity == Parity::even ? "even" : "any") << "\n";
    os << "cell " << spec.program.width_per_cell << "\n";
    for (const auto& item : spec.program.items) {
        bool bare = item.kind == ItemKind::ring && item.offset == 0 &&
                    item.steps.size() == 1;
        if (bare) {
            os << step_line(item.steps[0]) << "\n";
            continue;
        }
        os << (item.kind == ItemKind::ring ? "ring" : "block");
        if (item.offset != 0) os << " offset=" << item.offset;
        os << "\n";
        for (const auto& cs : item.steps) os << step_line(cs) << "\n";
        os << "end\n";
    }
    return os.str();
}

namespace {

struct Cursor {
    std::istringstream in;
    int lineno = 0;
    explicit Cursor(const std::string& text) : in(text) {}
    // next non-empty, non-comment line
    bool next(std::string& out) {
        std::string line;
        while (std::getline(in, line)) {
            ++lineno;
            auto h = line.find('#');
            if (h != std::string::npos) line.erase(h);
            size_t b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            size_t e = line.find_last_not_of(" \t\r");
            out = line.substr(b, e - b + 1);
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw invalid_input_error("lattice file line " + std::to_string(lineno) +
                                  ": " + msg);
    }
};

bool parse_index(const std::string& tok, int& idx, bool& next) {
    if (tok.empty()) return false;
    std::string t = tok;
    next = false;
    if (t.back() == '+') {
        next = true;
        t.pop_back();
    }
    if (t.empty()) return false;
    for (char c : t)
        if (!isdigit(static_cast<unsigned char>(c))) return false;
    idx = std::stoi(t);
    return true;
}

bool parse_step(Cursor& cur, const std::string& line, int m, CellStep& cs) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind != "V" && kind != "H") return false;
    cs = CellStep{};
    cs.type = kind == "V" ? StepType::V : StepType::H;
    std::string tok;
    if (!(ls >> tok) || !parse_index(tok, cs.a, cs.a_next))
        cur.fail("malformed strand index in step");
    if (cs.type == StepType::H) {
        if (!(ls >> tok) || !parse_index(tok, cs.b, cs.b_next))
            cur.fail("H step needs two strand indices");
    }
    if (ls >> tok) {
        if (tok == "open") cs.cls = BondClass::forced_open;
        else if (tok == "closed") cs.cls = BondClass::forced_closed;
        else cur.fail("unknown weight class '" + tok + "'");
        if (ls >> tok) cur.fail("trailing tokens after step");
    }
    if (cs.a < 0 || cs.a >= m || (cs.type == StepType::H && (cs.b < 0 || cs.b >= m)))
        cur.fail("strand index out of range for cell width " + std::to_string(m));
    return true;
}

} // namespace

LatticeSpec parse_lattice_file(const std::string& text) {
    Cursor cur(text);
    LatticeSpec spec;
    std::string line;

    if (!cur.next(line)) cur.fail("empty document");
    {
        std::istringstream ls(line);
        std::string kw, name, par;
        ls >> kw >> name >> par;
        if (kw != "lattice" || name.empty())
            cur.fail("expected 'lattice <name> parity=<any|even>'");
        spec.name = name;
        if (par == "parity=any" || par.empty()) spec.parity = Parity::any;
        else if (par == "parity=even") spec.parity = Parity::even;
        else cur.fail("bad parity field '" + par + "'");
    }

    if (!cur.next(line)) cur.fail("missing 'cell <width_per_cell>' header");
    {
        std::istringstream ls(line);
        std::string kw;
        int m = 0;
        ls >> kw >> m;
        if (kw != "cell" || m < 1) cur.fail("missing 'cell <width_per_cell>' header");
        spec.program.width_per_cell = m;
    }

    const int m = spec.program.width_per_cell;
    while (cur.next(line)) {
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "ring" || kw == "block") {
            ProgramItem item;
            item.kind = kw == "ring" ? ItemKind::ring : ItemKind::block;
            std::string tok;
            if (ls >> tok) {
                if (tok.rfind("offset=", 0) != 0) cur.fail("expected offset=<int>");
                item.offset = std::stoi(tok.substr(7));
            }
            while (true) {
                if (!cur.next(line)) cur.fail("unterminated " + kw + " group");
                if (line == "end") break;
                CellStep cs;
                if (!parse_step(cur, line, m, cs)) cur.fail("bad step line '" + line + "'");
                item.steps.push_back(cs);
            }
            if (item.steps.empty()) cur.fail("empty " + kw + " group");
            spec.program.items.push_back(std::move(item));
        } else {
            CellStep cs;
            if (!parse_step(cur, line, m, cs)) cur.fail("unrecognized line '" + line + "'");
            spec.program.items.push_back(ring({cs}));
        }
    }
    if (spec.program.items.empty()) cur.fail("program has no steps");

    // validation pass: adjacency and advance coverage at a legal width
    int n_check = spec.parity == Parity::even ? 2 : 1;
    instantiate(spec, n_check);
    instantiate(spec, 2 * n_check);
    return spec;
}

} // namespace critpoly
