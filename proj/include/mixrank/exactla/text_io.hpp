#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/matrix.hpp"

// Shared matrix text format: one row per line, comma-separated entries.
// Entries are integers, rationals "p/q", or decimal/scientific floats.
// Blank lines and lines starting with '#' are ignored.

namespace mixrank {

struct ParsedMatrix {
    RationalMatrix exact;  // decimals converted exactly (0.1 -> 1/10)
    RealMatrix real;       // nearest doubles
    RationalMatrix promoted; // doubles rounded to denominator 10^12
    bool has_decimal = false;

    Backend default_backend() const { return has_decimal ? Backend::floating : Backend::exact; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool is_integer_literal(const std::string& s) {
    std::size_t k = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (k == s.size()) return false;
    for (; k < s.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
    return true;
}

inline Integer parse_integer(const std::string& s) {
    return Integer(s[0] == '+' ? s.substr(1) : s, 10);
}

// Exact value of a decimal literal such as -1.25e-3.
inline bool parse_decimal_exact(const std::string& s, Rational& out) {
    std::size_t k = 0;
    bool neg = false;
    if (s[k] == '+' || s[k] == '-') neg = s[k++] == '-';
    std::string digits;
    long frac = 0;
    bool seen_digit = false, seen_dot = false;
    for (; k < s.size(); ++k) {
        char c = s[k];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            seen_digit = true;
            if (seen_dot) ++frac;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit) return false;
    long exp10 = 0;
    if (k < s.size()) {
        if (s[k] != 'e' && s[k] != 'E') return false;
        std::string e = s.substr(k + 1);
        if (e.empty() || !is_integer_literal(e)) return false;
        exp10 = std::strtol(e.c_str(), nullptr, 10);
    }
    Rational v{Integer(digits, 10)};
    long shift = exp10 - frac;
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    if (shift < 0)
        v /= Rational(p);
    else
        v *= Rational(p);
    v.canonicalize();
    out = neg ? Rational(-v) : v;
    return true;
}

} // namespace detail

inline ParsedMatrix parse_matrix(std::istream& in) {
    std::vector<std::vector<Rational>> exact_rows;
    std::vector<std::vector<double>> real_rows;
    ParsedMatrix out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<Rational> er;
        std::vector<double> rr;
        std::stringstream ss(t);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) throw ParseError(lineno, "empty entry");
            Rational q;
            bool decimal_token = false;
            if (auto slash = tok.find('/'); slash != std::string::npos) {
                std::string num = detail::trim(tok.substr(0, slash));
                std::string den = detail::trim(tok.substr(slash + 1));
                if (num.empty() || den.empty() || !detail::is_integer_literal(num) ||
                    !detail::is_integer_literal(den))
                    throw ParseError(lineno, "malformed rational '" + tok + "'");
                Integer d = detail::parse_integer(den);
                if (d == 0) throw ParseError(lineno, "zero denominator in '" + tok + "'");
                q = Rational(detail::parse_integer(num), d);
                q.canonicalize();
            } else if (detail::is_integer_literal(tok)) {
                q = Rational(detail::parse_integer(tok));
            } else if (detail::parse_decimal_exact(tok, q)) {
                decimal_token = true;
                out.has_decimal = true;
            } else {
                throw ParseError(lineno, "malformed entry '" + tok + "'");
            }
            rr.push_back(decimal_token ? std::strtod(tok.c_str(), nullptr) : q.get_d());
            er.push_back(std::move(q));
        }
        if (!exact_rows.empty() && er.size() != exact_rows.front().size())
            throw ParseError(lineno, "row has " + std::to_string(er.size()) +
                                         " entries, expected " +
                                         std::to_string(exact_rows.front().size()));
        exact_rows.push_back(std::move(er));
        real_rows.push_back(std::move(rr));
    }
    if (exact_rows.empty()) throw ParseError(lineno, "no matrix rows");
    const std::size_t m = exact_rows.size(), n = exact_rows.front().size();
    out.exact = RationalMatrix(m, n);
    out.real = RealMatrix(m, n);
    out.promoted = RationalMatrix(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            out.exact(i, j) = exact_rows[i][j];
            out.real(i, j) = real_rows[i][j];
            out.promoted(i, j) = promote(real_rows[i][j]);
        }
    return out;
}

inline ParsedMatrix parse_matrix_string(const std::string& text) {
    std::istringstream in(text);
    return parse_matrix(in);
}

inline ParsedMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open '" + path + "'");
    return parse_matrix(in);
}

// Rationals print as p/q (integers bare); doubles with 17 significant digits.
template <typename T> void write_matrix(std::ostream& os, const Matrix<T>& M) {
    for (std::size_t i = 0; i < M.rows(); ++i) {
        for (std::size_t j = 0; j < M.cols(); ++j) {
            if (j) os << ',';
            os << ScalarTraits<T>::format(M(i, j));
        }
        os << '\n';
    }
}

template <typename T> std::string format_matrix(const Matrix<T>& M) {
    std::ostringstream os;
    write_matrix(os, M);
    return os.str();
}

} // namespace mixrank
