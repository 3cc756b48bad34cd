#include "critpoly/connectivity.hpp"

#include <array>
#include <cstring>

#include "critpoly/errors.hpp"

namespace critpoly {

namespace {

constexpr int kMaxWidth = 32;

// Stack-resident working form used by the closure and the transfer plan.
struct SmallState {
    int w = 0;
    int mark = -1; // block label or -1
    std::array<std::uint8_t, kMaxWidth> block{};
    std::array<std::int8_t, kMaxWidth> offset{};

    void canonicalize() {
        std::array<std::int8_t, kMaxWidth + 1> relabel;
        relabel.fill(-1);
        std::array<std::int8_t, kMaxWidth + 1> base{};
        int next = 0;
        for (int i = 0; i < w; ++i) {
            int b = block[i];
            if (relabel[b] < 0) {
                relabel[b] = static_cast<std::int8_t>(next++);
                base[relabel[b]] = offset[i];
            }
            block[i] = static_cast<std::uint8_t>(relabel[b]);
        }
        for (int i = 0; i < w; ++i) {
            int d = offset[i] - base[block[i]];
            if (d < -4 || d > 3)
                throw capacity_error("winding offset out of packed range", 0);
            offset[i] = static_cast<std::int8_t>(d);
        }
        if (mark >= 0) mark = relabel[mark];
    }

    void pack(std::uint8_t* out) const {
        for (int i = 0; i < w; ++i)
            out[i] = static_cast<std::uint8_t>((block[i] << 3) |
                                               (offset[i] + 4));
        out[w] = static_cast<std::uint8_t>(mark + 1);
    }
    void unpack(const std::uint8_t* in, int width) {
        w = width;
        for (int i = 0; i < w; ++i) {
            block[i] = in[i] >> 3;
            offset[i] = static_cast<std::int8_t>((in[i] & 7) - 4);
        }
        mark = static_cast<int>(in[w]) - 1;
    }
};

SmallState to_small(const ConnectivityState& s) {
    if (s.width < 1 || s.width > kMaxWidth)
        throw capacity_error("frontier width outside packed range (1..32)",
                             static_cast<unsigned long long>(s.width));
    SmallState t;
    t.w = s.width;
    t.mark = s.mark;
    for (int i = 0; i < s.width; ++i) {
        t.block[i] = s.block[i];
        t.offset[i] = s.offset[i];
    }
    return t;
}

ConnectivityState to_public(const SmallState& t) {
    ConnectivityState s;
    s.width = t.w;
    s.mark = t.mark;
    s.block.assign(t.block.begin(), t.block.begin() + t.w);
    s.offset.assign(t.offset.begin(), t.offset.begin() + t.w);
    return s;
}

// merge/join along an edge i -> j carrying `seam` signed seam crossings;
// fills `out`, reports wrapped. When i and j are already connected the
// state is unchanged and wrapped indicates a noncontractible circuit.
bool join_edge_small(const SmallState& in, int i, int j, int seam,
                     SmallState& out) {
    out = in;
    if (in.block[i] == in.block[j]) {
        return in.offset[j] != in.offset[i] + seam;
    }
    int from = in.block[j];
    int into = in.block[i];
    int shift = in.offset[i] + seam - in.offset[j];
    for (int k = 0; k < in.w; ++k) {
        if (in.block[k] == from) {
            out.block[k] = static_cast<std::uint8_t>(into);
            out.offset[k] = static_cast<std::int8_t>(in.offset[k] + shift);
        }
    }
    if (in.mark == from) out.mark = into;
    out.canonicalize();
    return false;
}

// advance with the bond closed: the old point detaches, a fresh singleton
// takes its label. died reports block death, marked_died an open-sector kill.
void advance_closed_small(const SmallState& in, int i, SmallState& out,
                          bool& died, bool& marked_died) {
    out = in;
    int b = in.block[i];
    bool alone = true;
    for (int k = 0; k < in.w && alone; ++k)
        if (k != i && in.block[k] == b) alone = false;
    died = alone;
    marked_died = alone && in.mark == b;
    out.block[i] = static_cast<std::uint8_t>(kMaxWidth); // unused fresh label
    out.offset[i] = 0;
    if (died && in.mark == b) out.mark = -1;
    out.canonicalize();
}

SmallState start_small(int width, Sector sector) {
    SmallState s;
    s.w = width;
    for (int i = 0; i < width; ++i) {
        s.block[i] = sector == Sector::open ? 0 : static_cast<std::uint8_t>(i);
        s.offset[i] = 0;
    }
    s.mark = sector == Sector::open ? 0 : -1;
    return s;
}

std::uint64_t fnv1a(const std::uint8_t* p, int n) {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

// seam-filtered branch application; returns false when the branch leaves
// the sector.
bool apply_join_small(const SmallState& in, int a, int b, int seam,
                      Sector sector, SmallState& out) {
    bool wrapped = join_edge_small(in, a, b, seam, out);
    if (!wrapped) return true;
    if (sector == Sector::closed) return false;
    return in.mark >= 0 && in.block[a] == in.mark; // marked winding allowed
}

bool apply_advance_closed_small(const SmallState& in, int a, Sector sector,
                                SmallState& out) {
    bool died = false, marked_died = false;
    advance_closed_small(in, a, out, died, marked_died);
    return !(sector == Sector::open && marked_died);
}

} // namespace

ConnectivityState closed_start(int width) {
    if (width < 1) throw invalid_input_error("width must be >= 1");
    return to_public(start_small(width, Sector::closed));
}

ConnectivityState open_start(int width) {
    if (width < 1) throw invalid_input_error("width must be >= 1");
    return to_public(start_small(width, Sector::open));
}

JoinOutcome join(const ConnectivityState& s, int i, int j) {
    const int w = s.width;
    if (i < 0 || i >= w || j < 0 || j >= w)
        throw contract_error("join: frontier point out of range");
    int seam = 0;
    if (i == j) {
        if (w != 1) throw contract_error("join: i == j is only legal at width 1");
        seam = 1;
    } else if (w == 2) {
        // order disambiguates the double edge: (1,0) is the seam edge
        seam = (i == 1 && j == 0) ? 1 : 0;
    } else if (j == i + 1 || i == j + 1) {
        if (i == j + 1) std::swap(i, j);
    } else if ((i == 0 && j == w - 1) || (j == 0 && i == w - 1)) {
        i = w - 1;
        j = 0;
        seam = 1;
    } else {
        throw contract_error("join: points are not cyclically adjacent");
    }
    SmallState out;
    bool wrapped = join_edge_small(to_small(s), i, j, seam, out);
    return {to_public(out), wrapped};
}

AdvanceOutcome advance(const ConnectivityState& s, int i, bool bond_open) {
    if (i < 0 || i >= s.width)
        throw contract_error("advance: frontier point out of range");
    if (bond_open) return {s, false, false};
    SmallState out;
    bool died = false, marked_died = false;
    advance_closed_small(to_small(s), i, out, died, marked_died);
    return {to_public(out), died, marked_died};
}

std::optional<ConnectivityState> apply_join_edge(const ConnectivityState& s,
                                                 int i, int j, int seam,
                                                 Sector sector) {
    SmallState out;
    if (!apply_join_small(to_small(s), i, j, seam, sector, out))
        return std::nullopt;
    return to_public(out);
}

std::optional<ConnectivityState> apply_advance_closed(const ConnectivityState& s,
                                                      int i, Sector sector) {
    SmallState out;
    if (!apply_advance_closed_small(to_small(s), i, sector, out))
        return std::nullopt;
    return to_public(out);
}

ConnectivityState StateSpace::state(std::uint32_t id) const {
    SmallState t;
    t.unpack(packed(id), width_);
    return to_public(t);
}

std::uint32_t StateSpace::find_packed(const std::uint8_t* key) const {
    std::uint64_t h = fnv1a(key, bpp_);
    std::uint64_t slot = h & mask_;
    while (true) {
        std::uint32_t id = table_[slot];
        if (id == npos) return npos;
        if (std::memcmp(packed(id), key, bpp_) == 0) return id;
        slot = (slot + 1) & mask_;
    }
}

std::uint32_t StateSpace::find(const ConnectivityState& s) const {
    if (s.width != width_) return npos;
    std::array<std::uint8_t, kMaxWidth + 1> key{};
    to_small(s).pack(key.data());
    return find_packed(key.data());
}

void StateSpace::rehash(std::size_t slots) {
    table_.assign(slots, npos);
    mask_ = slots - 1;
    for (std::uint32_t id = 0; id < count_; ++id) {
        std::uint64_t h = fnv1a(packed(id), bpp_);
        std::uint64_t slot = h & mask_;
        while (table_[slot] != npos) slot = (slot + 1) & mask_;
        table_[slot] = id;
    }
}

std::uint32_t StateSpace::insert(const std::uint8_t* key) {
    std::uint64_t h = fnv1a(key, bpp_);
    std::uint64_t slot = h & mask_;
    while (true) {
        std::uint32_t id = table_[slot];
        if (id == npos) break;
        if (std::memcmp(packed(id), key, bpp_) == 0) return id;
        slot = (slot + 1) & mask_;
    }
    std::uint32_t id = static_cast<std::uint32_t>(count_);
    arena_.insert(arena_.end(), key, key + bpp_);
    ++count_;
    table_[slot] = id;
    if (count_ * 10 > table_.size() * 7) rehash(table_.size() * 2);
    return id;
}

bool apply_step_packed(const std::uint8_t* in, int width, Sector sector,
                       const Step& st, std::uint8_t* out) {
    SmallState cur, res;
    cur.unpack(in, width);
    bool ok;
    if (st.type == StepType::H) {
        ok = apply_join_small(cur, static_cast<int>(st.a),
                              static_cast<int>(st.b), st.seam, sector, res);
    } else {
        ok = apply_advance_closed_small(cur, static_cast<int>(st.a), sector,
                                        res);
    }
    if (ok) res.pack(out);
    return ok;
}

void pack_start_state(int width, Sector sector, std::uint8_t* out) {
    start_small(width, sector).pack(out);
}

StateSpace close_state_space(int width, Sector sector, const InstProgram& prog,
                             std::uint64_t cap) {
    if (width != prog.width)
        throw contract_error("close_state_space: width does not match program");
    if (width < 1 || width > kMaxWidth)
        throw capacity_error("frontier width outside packed range (1..32)",
                             static_cast<unsigned long long>(width));

    StateSpace sp;
    sp.width_ = width;
    sp.sector_ = sector;
    sp.bpp_ = width + 1;
    sp.rehash(1024);

    std::array<std::uint8_t, kMaxWidth + 1> key{};
    start_small(width, sector).pack(key.data());
    sp.insert(key.data());

    SmallState cur, out;
    for (std::uint32_t id = 0; id < sp.count_; ++id) {
        cur.unpack(sp.packed(id), width);
        for (const Step& st : prog.steps) {
            bool ok;
            if (st.type == StepType::H) {
                if (st.cls == BondClass::forced_closed) continue;
                ok = apply_join_small(cur, static_cast<int>(st.a),
                                      static_cast<int>(st.b), st.seam, sector,
                                      out);
            } else {
                if (st.cls == BondClass::forced_open) continue;
                ok = apply_advance_closed_small(cur, static_cast<int>(st.a),
                                                sector, out);
            }
            if (!ok) continue;
            out.pack(key.data());
            sp.insert(key.data());
            if (sp.count_ > cap)
                throw capacity_error("state space exceeds cap", sp.count_);
        }
    }
    return sp;
}

} // namespace critpoly
