#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "critpoly/lattice.hpp"

namespace critpoly {

enum class Sector : std::uint8_t { closed, open };

// Cluster-connectivity state on the cut circle: a partition of the frontier
// points into blocks, a per-point seam-crossing offset (winding bookkeeping
// of the recorded connection paths), and an optional marked block.
//
// Canonical form: blocks labeled in order of first appearance, each block's
// offsets shifted so its first point carries offset 0.
struct ConnectivityState {
    int width = 0;
    std::vector<std::uint8_t> block;
    std::vector<std::int8_t> offset;
    int mark = -1;

    bool operator==(const ConnectivityState&) const = default;
};

ConnectivityState closed_start(int width); // all singletons
ConnectivityState open_start(int width);   // all points in one marked block

struct JoinOutcome {
    ConnectivityState state;
    bool wrapped = false;
};

// Bond between cyclically adjacent frontier points. The seam edge is the
// (width-1, 0) adjacency; at width 2 the argument order disambiguates
// ((1,0) crosses the seam, (0,1) does not), and at width 1 the only legal
// join is the seam self-loop (0,0).
JoinOutcome join(const ConnectivityState& s, int i, int j);

struct AdvanceOutcome {
    ConnectivityState state;
    bool died = false;        // the old point's block detached from the cut
    bool marked_died = false; // open-sector exit flag
};

AdvanceOutcome advance(const ConnectivityState& s, int i, bool bond_open);

// Sector-filtered edge application used by closure and transfer. nullopt
// means the branch exits the sector (winding in the closed sector, marked
// death or unmarked winding in the open sector).
std::optional<ConnectivityState> apply_join_edge(const ConnectivityState& s,
                                                 int i, int j, int seam,
                                                 Sector sector);
std::optional<ConnectivityState> apply_advance_closed(const ConnectivityState& s,
                                                      int i, Sector sector);

// Immutable indexed set of canonical states, closed under every step of the
// generating program. Ids follow BFS discovery order; id 0 is the sector's
// start state.
class StateSpace {
public:
    static constexpr std::uint32_t npos = 0xFFFFFFFFu;

    int width() const { return width_; }
    Sector sector() const { return sector_; }
    std::size_t size() const { return count_; }

    ConnectivityState state(std::uint32_t id) const;
    std::uint32_t find(const ConnectivityState& s) const; // npos if absent

    // packed access for the transfer engine
    int bytes_per_state() const { return bpp_; }
    const std::uint8_t* packed(std::uint32_t id) const {
        return arena_.data() + static_cast<std::size_t>(id) * bpp_;
    }
    std::uint32_t find_packed(const std::uint8_t* key) const;

private:
    friend StateSpace close_state_space(int, Sector, const InstProgram&,
                                        std::uint64_t);
    int width_ = 0;
    Sector sector_ = Sector::closed;
    int bpp_ = 0;
    std::size_t count_ = 0;
    std::vector<std::uint8_t> arena_;
    std::vector<std::uint32_t> table_;
    std::uint64_t mask_ = 0;

    std::uint32_t insert(const std::uint8_t* key); // existing or new id
    void rehash(std::size_t slots);
};

// Breadth-first closure of the sector's start state under all outcome
// branches of all program steps. Throws capacity_error beyond `cap` states.
StateSpace close_state_space(int width, Sector sector, const InstProgram& prog,
                             std::uint64_t cap = 100'000'000ull);

// Engine hook: applies a step's state-moving branch (the join of an H step,
// the bond-closed advance of a V step) to a packed state. Returns false when
// that branch exits the sector. Steps whose moving branch does not exist
// (forced-open V, forced-closed H) are pure identities and must be skipped
// by the caller.
bool apply_step_packed(const std::uint8_t* in, int width, Sector sector,
                       const Step& st, std::uint8_t* out);

// Packs the canonical start state of a sector into width+1 bytes.
void pack_start_state(int width, Sector sector, std::uint8_t* out);

} // namespace critpoly
