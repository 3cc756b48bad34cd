#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "critpoly/connectivity.hpp"
#include "critpoly/errors.hpp"
#include "critpoly/extrapolate.hpp"
#include "critpoly/lattice.hpp"
#include "critpoly/ledger.hpp"
#include "critpoly/oracle.hpp"
#include "critpoly/threshold.hpp"

using namespace critpoly;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// widths: "N" or "A..B"
std::pair<int, int> parse_width_range(const std::string& s) {
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            int n = std::stoi(s);
            return {n, n};
        }
        int a = std::stoi(s.substr(0, dots));
        int b = std::stoi(s.substr(dots + 2));
        if (a < 1 || b < a) throw invalid_input_error("bad width range " + s);
        return {a, b};
    } catch (const std::invalid_argument&) {
        throw invalid_input_error("bad width range " + s);
    }
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw invalid_input_error("empty integer list");
    return out;
}

void write_manifest(const std::string& path, const std::string& command,
                    const json& args, double wall_seconds) {
    if (path.empty()) return;
    json m{{"command", command},
           {"arguments", args},
           {"wall_seconds", wall_seconds},
           {"versions", {{"critpoly", "1.0"}, {"mpfr", MPFR_VERSION_STRING}}},
           {"timestamp", iso8601_now()}};
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write manifest " + path);
    out << m.dump(2) << "\n";
}

LatticeSpec resolve_lattice(const std::string& name, const std::string& file) {
    if (!file.empty()) return parse_lattice_file(read_file(file));
    return catalog_lattice(name);
}

Precision make_precision(int digits, std::string tol) {
    if (tol.empty()) return Precision::from_digits(digits);
    return Precision::make(digits, tol);
}

int cmd_solve(const LatticeSpec& spec, int n_lo, int n_hi, int digits,
              const std::string& tol, const std::string& guess,
              const std::string& ledger_path, int workers,
              std::uint64_t state_cap, const std::string& manifest) {
    auto t0 = std::chrono::steady_clock::now();
    ResultLedger ledger(ledger_path);
    SolverConfig cfg = SolverConfig::make(make_precision(digits, tol));
    cfg.workers = workers;
    cfg.state_cap = state_cap;
    if (!guess.empty()) cfg.guess = BondWeight::from_p(Real(guess));

    std::cout << "lattice " << spec.name << ", digits " << digits << "\n";
    std::cout << "   n  p_root"
              << std::string(digits > 10 ? digits - 6 : 6, ' ')
              << "householder  power-iters  seconds\n";
    for (int n = n_lo; n <= n_hi; ++n) {
        if (spec.parity == Parity::even && n % 2) {
            if (n_lo == n_hi)
                throw invalid_input_error("lattice " + spec.name +
                                          " is built at even widths only");
            continue;
        }
        auto s0 = std::chrono::steady_clock::now();
        ThresholdRecord rec = find_threshold(spec, n, cfg, ledger);
        auto s1 = std::chrono::steady_clock::now();
        std::cout << "  " << n << "  "
                  << rec.p_root.substr(0, static_cast<std::size_t>(digits) + 2)
                  << "  " << rec.householder_steps << "  "
                  << rec.power_iterations_total << "  "
                  << std::chrono::duration<double>(s1 - s0).count() << "\n";
    }
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    write_manifest(manifest, "solve",
                   json{{"lattice", spec.name},
                        {"widths", {n_lo, n_hi}},
                        {"digits", digits},
                        {"ledger", ledger_path},
                        {"workers", workers}},
                   wall);
    return 0;
}

int cmd_extrapolate(const std::string& input, const std::string& cls,
                    const std::string& exponents_arg, int digits,
                    const std::string& terms_arg, const std::string& windows_arg,
                    const std::string& output, const std::string& manifest) {
    auto t0 = std::chrono::steady_clock::now();
    set_working_digits(digits + 10);
    Series s = parse_series_csv(read_file(input));
    if (s.points.size() < 4)
        throw invalid_input_error("extrapolation needs at least 4 points");
    const int npts = static_cast<int>(s.points.size());

    std::vector<Real> exponents;
    std::string family = cls.empty() ? "A" : cls;
    if (!exponents_arg.empty()) {
        for (int e : parse_int_list(exponents_arg)) exponents.push_back(e);
    } else {
        std::string latt = family == "A" ? "kagome" : "square";
        for (int e : default_scaling_exponents(latt, 8)) exponents.push_back(e);
    }

    // effective-exponent path from the data
    json delta1_path = json::array();
    Real seed = exponents[0];
    try {
        Series q = ratio_series(s);
        for (const auto& [n, qn] : q.points) {
            if (!(qn > 0)) continue;
            try {
                Real d = solve_effective_exponent(qn, n, seed);
                delta1_path.push_back(
                    {{"n", n}, {"delta1", to_decimal_string(d, 8)}});
            } catch (const invalid_input_error&) {
            }
        }
    } catch (const invalid_input_error&) {
    }

    std::vector<int> term_counts =
        terms_arg.empty() ? std::vector<int>{3, 4, 5, 6, 7}
                          : parse_int_list(terms_arg);
    std::vector<int> windows;
    if (windows_arg.empty()) {
        for (int w = npts; w >= npts - 4 && w >= 5; --w) windows.push_back(w);
    } else {
        windows = parse_int_list(windows_arg);
    }

    ScalingFit fit = extrapolate_pc(s, exponents, term_counts, windows);

    json rep;
    rep["input"] = input;
    rep["points"] = npts;
    rep["exponents"] = json::array();
    for (const auto& e : fit.exponents)
        rep["exponents"].push_back(to_decimal_string(e, 6));
    rep["delta1_path"] = delta1_path;
    rep["pc_limit"] = to_decimal_string(fit.pc_limit, digits);
    rep["error"] = to_decimal_string(fit.error, 4);
    rep["perturbation_shift"] = to_decimal_string(fit.perturbation_shift, 4);
    rep["amplitudes"] = json::array();
    for (const auto& a : fit.amplitudes)
        rep["amplitudes"].push_back(to_decimal_string(a, 12));
    rep["variants_used"] = fit.variants_used;
    rep["variants"] = json::array();
    for (const auto& v : fit.variants)
        rep["variants"].push_back({{"terms", v.terms},
                                   {"window", v.window},
                                   {"pc", to_decimal_string(v.pc, digits)}});
    if (!manifest.empty()) rep["manifest"] = manifest;

    std::string text = rep.dump(2) + "\n";
    if (output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(output);
        if (!out) throw invalid_input_error("cannot write " + output);
        out << text;
        std::cout << "p_c = " << to_decimal_string(fit.pc_limit, digits)
                  << " +- " << to_decimal_string(fit.error, 3) << "  ("
                  << output << ")\n";
    }
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    write_manifest(manifest, "extrapolate",
                   json{{"input", input}, {"digits", digits}}, wall);
    return 0;
}

int cmd_oracle(const std::string& lattice, const std::string& cells,
               const std::string& basis_file, int digits, int cap,
               int workers, const std::string& manifest) {
    auto t0 = std::chrono::steady_clock::now();
    TorusBasis basis;
    if (!basis_file.empty()) {
        basis = parse_basis_file(read_file(basis_file));
    } else {
        auto x = cells.find('x');
        if (x == std::string::npos)
            throw invalid_input_error("--cells expects AxB, e.g. 2x2");
        basis = torus_basis(lattice, std::stoi(cells.substr(0, x)),
                            std::stoi(cells.substr(x + 1)));
    }
    CriticalPolynomial poly = critical_polynomial(basis, cap, workers);
    Real root = root_in_unit_interval(poly, digits);
    std::cout << "basis: " << basis.provenance << " (" << basis.vertices
              << " vertices, " << basis.edges.size() << " edges)\n";
    std::cout << "coefficients: " << polynomial_to_string(poly) << "\n";
    std::cout << "root: " << to_decimal_string(root, digits) << "\n";
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    write_manifest(manifest, "oracle",
                   json{{"basis", basis.provenance}, {"digits", digits}}, wall);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bond percolation thresholds from critical-polynomial "
                 "eigenvalue crossings"};
    app.require_subcommand(1);

    std::string lattice, lattice_file, width = "2", tol, guess, manifest;
    const char* env_ledger = std::getenv("CRITPOLY_LEDGER");
    std::string ledger_path = env_ledger ? env_ledger : "";
    int digits = 60, workers = 1;
    std::uint64_t state_cap = 100'000'000ull;

    auto* solve = app.add_subcommand("solve", "solve lattice thresholds");
    solve->add_option("--lattice", lattice, "catalog lattice name");
    solve->add_option("--lattice-file", lattice_file, "lattice description file");
    solve->add_option("--width", width, "width N or range A..B");
    solve->add_option("--digits", digits, "decimal working precision");
    solve->add_option("--tol", tol, "convergence tolerance delta");
    solve->add_option("--guess", guess, "initial p guess");
    solve->add_option("--ledger", ledger_path, "result ledger path (JSONL)");
    solve->add_option("--workers", workers, "worker threads");
    solve->add_option("--state-cap", state_cap, "state space cap");
    solve->add_option("--manifest", manifest, "write run manifest JSON here");

    std::string input, cls, exponents_arg, terms_arg, windows_arg, output;
    auto* extr = app.add_subcommand("extrapolate", "finite-size extrapolation");
    extr->add_option("--input", input, "series CSV (header n,p_c)")->required();
    extr->add_option("--class", cls, "exponent class preset: A {6,7,8,...} or B {4,6,8,...}");
    extr->add_option("--exponents", exponents_arg, "comma-separated exponent list");
    extr->add_option("--digits", digits, "decimal working precision");
    extr->add_option("--terms", terms_arg, "term counts to try");
    extr->add_option("--windows", windows_arg, "window sizes to try");
    extr->add_option("--output", output, "write fit report JSON here");
    extr->add_option("--manifest", manifest, "write run manifest JSON here");

    std::string cells = "1x1", basis_file;
    int cap = 24;
    auto* orac = app.add_subcommand("oracle", "exact critical polynomial of a torus basis");
    orac->add_option("--lattice", lattice, "catalog lattice name");
    orac->add_option("--cells", cells, "cell counts AxB");
    orac->add_option("--basis-file", basis_file, "basis description file");
    orac->add_option("--digits", digits, "decimal precision of the root");
    orac->add_option("--cap", cap, "edge enumeration cap");
    orac->add_option("--workers", workers, "worker threads");
    orac->add_option("--manifest", manifest, "write run manifest JSON here");

    auto* cat = app.add_subcommand("catalog", "list built-in lattices");

    auto* states = app.add_subcommand("states", "state-space sizes (debug)");
    states->add_option("--lattice", lattice, "catalog lattice name");
    states->add_option("--width", width, "width N or range A..B");
    states->add_option("--state-cap", state_cap, "state space cap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            if (lattice.empty() && lattice_file.empty())
                throw invalid_input_error("solve needs --lattice or --lattice-file");
            auto [lo, hi] = parse_width_range(width);
            return cmd_solve(resolve_lattice(lattice, lattice_file), lo, hi,
                             digits, tol, guess, ledger_path, workers, state_cap,
                             manifest);
        }
        if (extr->parsed())
            return cmd_extrapolate(input, cls, exponents_arg, digits, terms_arg,
                                   windows_arg, output, manifest);
        if (orac->parsed()) {
            if (lattice.empty() && basis_file.empty())
                throw invalid_input_error("oracle needs --lattice or --basis-file");
            return cmd_oracle(lattice, cells, basis_file, digits, cap, workers,
                              manifest);
        }
        if (cat->parsed()) {
            for (const auto& spec : catalog()) {
                std::cout << spec.name << "  parity="
                          << (spec.parity == Parity::even ? "even" : "any")
                          << "  cell-width=" << spec.program.width_per_cell;
                if (spec.exact_threshold)
                    std::cout << "  exact p_c = "
                              << to_decimal_string(
                                     spec.exact_threshold->value(30), 30)
                              << "  (" << spec.exact_threshold->note << ")";
                std::cout << "\n";
            }
            return 0;
        }
        if (states->parsed()) {
            const auto& spec = catalog_lattice(lattice);
            auto [lo, hi] = parse_width_range(width);
            for (int n = lo; n <= hi; ++n) {
                if (spec.parity == Parity::even && n % 2) continue;
                auto prog = instantiate(spec, n);
                auto closed = close_state_space(prog.width, Sector::closed,
                                                prog, state_cap);
                auto open = close_state_space(prog.width, Sector::open, prog,
                                              state_cap);
                std::cout << spec.name << " n=" << n << " width=" << prog.width
                          << " steps=" << prog.steps.size()
                          << " closed=" << closed.size()
                          << " open=" << open.size() << "\n";
            }
            return 0;
        }
    } catch (const invalid_input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nonconvergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const capacity_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
