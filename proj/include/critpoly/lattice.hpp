#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "critpoly/precision.hpp"

namespace critpoly {

// A lattice is described by a periodic row program: an ordered list of
// elementary moves on the frontier strands of a cut cylinder.
//
//   V <i>        advance strand i one row via a vertical bond
//   H <i> <j>    bond between adjacent strands i and j (j east of i)
//
// Indices are per unit cell; a trailing '+' refers to the next cell's
// strand. Moves carry a weight class: `bond` is a real p-weighted bond,
// `open`/`closed` are auxiliary always-open / always-closed moves used by
// decorated constructions (site splits, strand retirement).
//
// Replication around the circumference comes in two flavors:
//   ring items   one step expanded over all cells before the next step
//                (straight constructions, constant-height bond rings)
//   block items  a group of steps expanded cell by cell (helical sweeps,
//                where diagonal bond chains wind the cylinder)
// An item may carry a strand frame offset, used by constructions whose
// bond pattern is shifted relative to the cell frame on some rows.

enum class StepType : std::uint8_t { V, H };
enum class BondClass : std::uint8_t { bond, forced_open, forced_closed };
enum class Parity { any, even };
enum class ItemKind : std::uint8_t { ring, block };

struct CellStep {
    StepType type = StepType::V;
    BondClass cls = BondClass::bond;
    int a = 0;
    bool a_next = false;
    int b = 0;
    bool b_next = false;
};

struct ProgramItem {
    ItemKind kind = ItemKind::ring;
    int offset = 0;
    std::vector<CellStep> steps;
};

struct RowProgram {
    int width_per_cell = 1;
    std::vector<ProgramItem> items;
};

// Exact thresholds are stored as the defining integer polynomial together
// with a provenance note; the decimal value is produced on demand.
struct ExactThreshold {
    std::vector<long long> poly; // c0 + c1 p + c2 p^2 + ...
    std::string note;
    Real value(int digits) const;
};

struct LatticeSpec {
    std::string name;
    Parity parity = Parity::any;
    RowProgram program;
    std::optional<ExactThreshold> exact_threshold;
};

// A program instantiated to a concrete circumference: a flat cyclic list
// of strand moves. `seam` counts signed seam crossings of an H edge.
struct Step {
    StepType type = StepType::V;
    BondClass cls = BondClass::bond;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::int8_t seam = 0;
};

struct InstProgram {
    std::string lattice;
    int width = 0;
    std::vector<Step> steps;
};

// The eleven Archimedean lattices. cross, snub-square, snub-hexagonal and
// ruby are built at even widths only.
std::vector<LatticeSpec> catalog();
const LatticeSpec& catalog_lattice(const std::string& name);

// Replicates the cell program around a circumference of n cells and
// validates it (eastward adjacency of every H step, full advance coverage).
InstProgram instantiate(const LatticeSpec& spec, int n);

LatticeSpec parse_lattice_file(const std::string& text);
std::string serialize(const LatticeSpec& spec);

} // namespace critpoly
