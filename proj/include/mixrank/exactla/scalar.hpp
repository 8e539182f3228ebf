#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <gmpxx.h>

namespace mixrank {

using Rational = mpq_class;
using Integer = mpz_class;

enum class Backend { exact, floating };

inline const char* to_string(Backend b) {
    return b == Backend::exact ? "exact" : "float";
}

template <typename T> struct ScalarTraits;

template <> struct ScalarTraits<Rational> {
    static constexpr bool exact = true;
    static constexpr Backend backend = Backend::exact;

    static int sign(const Rational& v) { return sgn(v); }
    static Rational abs(const Rational& v) { return ::abs(v); }
    static double to_double(const Rational& v) { return v.get_d(); }
    static bool is_zero(const Rational& v) { return sgn(v) == 0; }

    static std::string format(const Rational& v) {
        // mpq_class prints integers without a denominator and p/q otherwise.
        return v.get_str();
    }
};

template <> struct ScalarTraits<double> {
    static constexpr bool exact = false;
    static constexpr Backend backend = Backend::floating;

    static int sign(double v) { return (v > 0.0) - (v < 0.0); }
    static double abs(double v) { return std::fabs(v); }
    static double to_double(double v) { return v; }
    static bool is_zero(double v) { return v == 0.0; }

    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

template <typename T>
concept ExactScalar = ScalarTraits<T>::exact;

template <typename T>
concept FloatScalar = !ScalarTraits<T>::exact;

// Rational in lowest terms from a numerator/denominator pair.
inline Rational make_rational(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

// Nearest rational with denominator `den` (10^12 by default).
inline Rational round_to_denominator(double x, const Integer& den) {
    Rational scaled(x);
    scaled *= den;
    // Round half away from zero.
    Integer n = scaled.get_num();
    Integer d = scaled.get_den();
    Integer q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    if (2 * r >= d) q += 1;
    Rational out(q, den);
    out.canonicalize();
    return out;
}

inline const Integer& promotion_denominator() {
    static const Integer den("1000000000000");
    return den;
}

inline Rational promote(double x) {
    return round_to_denominator(x, promotion_denominator());
}

} // namespace mixrank
