#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <string>

#include "critpoly/errors.hpp"

namespace critpoly {

// Arbitrary-precision real. Variable precision, set per value at creation;
// the thread's default precision governs fresh temporaries.
using Real = boost::multiprecision::mpfr_float;

inline int digits_to_bits(int digits) {
    // log2(10) ~ 3.3220, plus guard bits for accumulated rounding.
    return static_cast<int>(digits * 3.3220) + 32;
}

// Sets the calling thread's default working precision (decimal digits).
inline void set_working_digits(int digits) {
    Real::default_precision(static_cast<unsigned>(digits));
}

// Decimal working precision plus power-iteration tolerance delta.
// delta defaults to 1e-40; digits must carry at least 2x the digits of
// delta so that central differences at epsilon = sqrt(delta) stay resolvable.
struct Precision {
    int digits = 100;
    Real delta;

    static Precision make(int digits, const std::string& delta_str = "1e-40") {
        if (digits < 2) throw invalid_input_error("precision: digits must be >= 2");
        set_working_digits(digits);
        Precision p;
        p.digits = digits;
        p.delta = Real(delta_str);
        if (!(p.delta > 0)) throw invalid_input_error("precision: delta must be > 0");
        Real need = -2 * log10(p.delta);
        if (Real(digits) < need)
            throw invalid_input_error("precision: digits " + std::to_string(digits) +
                                      " below 2*(-log10 delta) guard");
        return p;
    }

    // Derives the tolerance from the digit budget: delta = 10^-min(40, digits/2).
    static Precision from_digits(int digits) {
        int k = digits / 2 < 40 ? digits / 2 : 40;
        return make(digits, "1e-" + std::to_string(k));
    }
};

// Fortuin-Kasteleyn bond weight v = p/(1-p); p and v kept consistent.
struct BondWeight {
    Real v;
    Real p;

    static BondWeight from_v(const Real& v) {
        if (v < 0) throw invalid_input_error("bond weight: v must be >= 0");
        BondWeight w;
        w.v = v;
        w.p = v / (1 + v);
        return w;
    }
    static BondWeight from_p(const Real& p) {
        if (p < 0 || p >= 1) throw invalid_input_error("bond weight: p must lie in [0,1)");
        BondWeight w;
        w.p = p;
        w.v = p / (1 - p);
        return w;
    }
};

// Full-precision decimal string (round-trippable at the value's precision).
std::string to_decimal_string(const Real& x, int digits);

} // namespace critpoly
