#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixrank/em.hpp"
#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/families/polynomial.hpp"

// Closed-form parametric families: the U_{a,b} data tables and their eight
// boundary MLEs, the rectangle family, and the two-parameter quartic family.

namespace mixrank::families {

inline void require_uab_params(long a, long b) {
    if (b < 0 || a < b) throw DomainError("U_{a,b}: need a >= b >= 0");
    if (a == 0) throw DomainError("U_{a,b}: a and b must not both be zero");
}

inline RationalMatrix uab_rational(long a, long b) {
    const Rational A(a), B(b);
    return RationalMatrix{{A, A, B, B}, {A, B, A, B}, {B, A, B, A}, {B, B, A, A}};
}

inline em::DataMatrix uab_matrix(long a, long b) {
    require_uab_params(a, b);
    return em::DataMatrix(em::Counts{{a, a, b, b}, {a, b, a, b}, {b, a, b, a}, {b, b, a, a}});
}

// U_{a,b} / (8(a+b)) has nonnegative rank <= 3 iff b^2 + 2ab - a^2 >= 0.
inline bool uab_in_model(long a, long b) {
    require_uab_params(a, b);
    const Integer A(a), B(b);
    return B * B + 2 * A * B - A * A >= 0;
}

// Coefficients of the cubic whose simple root gives the MLE parameter t.
inline Polynomial uab_cubic(long a_, long b_) {
    const Rational a(a_), b(b_);
    auto p = [](const Rational& x, int k) {
        Rational r = 1;
        for (int i = 0; i < k; ++i) r *= x;
        return r;
    };
    const Rational c3 = 6 * p(a, 3) + 16 * p(a, 2) * b + 14 * a * p(b, 2) + 4 * p(b, 3);
    const Rational c2 = -(20 * p(a, 4) + 44 * p(a, 3) * b + 8 * a * p(b, 3) + 32 * p(a, 2) * p(b, 2));
    const Rational c1 = 22 * p(a, 5) + 43 * p(a, 4) * b + 30 * p(a, 3) * p(b, 2) + 7 * p(a, 2) * p(b, 3);
    const Rational c0 = -(8 * p(a, 6) + 16 * p(a, 5) * b + 10 * p(a, 4) * p(b, 2) + 2 * p(a, 3) * p(b, 3));
    return Polynomial({c0, c1, c2, c3});
}

template <typename T> struct UabParameters {
    T t, s, u, v, w, r;
};

template <typename T> UabParameters<T> uab_parameters(const T& a, const T& b, const T& t) {
    UabParameters<T> q;
    q.t = t;
    q.s = ((a + b) * t - a * a) / a;
    q.u = t * b / a;
    const T den = 2 * a * a * a + a * a * b;
    const T k = 3 * a * a + 5 * a * b + 2 * b * b;
    q.w = -(t * (k * t - 4 * a * a * a - 5 * a * a * b - 2 * a * b * b)) / den;
    q.r = (2 * a * a + a * b - (a + b) * t) / a;
    q.v = (k * t * t - (6 * a * a * a + 8 * a * a * b + 3 * a * b * b) * t + 6 * a * a * a * b +
           2 * a * a * b * b + 4 * a * a * a * a) /
          den;
    return q;
}

// The eight MLE patterns, each divided by 8(a+b).
template <typename T>
std::array<Matrix<T>, 8> uab_mle_matrices(const T& a, const T& b, const UabParameters<T>& p) {
    const T &t = p.t, &s = p.s, &u = p.u, &v = p.v, &w = p.w, &r = p.r;
    std::array<Matrix<T>, 8> M{
        Matrix<T>{{a, a, b, b}, {v, w, t, u}, {w, v, u, t}, {s, s, r, r}},
        Matrix<T>{{v, t, w, u}, {a, b, a, b}, {s, r, s, r}, {w, u, v, t}},
        Matrix<T>{{t, v, u, w}, {r, s, r, s}, {b, a, b, a}, {u, w, t, v}},
        Matrix<T>{{r, r, s, s}, {t, u, v, w}, {u, t, w, v}, {b, b, a, a}},
        Matrix<T>{{a, v, w, s}, {a, w, v, s}, {b, t, u, r}, {b, u, t, r}},
        Matrix<T>{{v, a, s, w}, {t, b, r, u}, {w, a, s, v}, {u, b, r, t}},
        Matrix<T>{{t, r, b, u}, {v, s, a, w}, {u, r, b, t}, {w, s, a, v}},
        Matrix<T>{{r, t, u, b}, {r, u, t, b}, {s, v, w, a}, {s, w, v, a}},
    };
    const T scale = 8 * (a + b);
    for (auto& m : M) m /= scale;
    return M;
}

struct UabMle {
    long a = 0, b = 0;
    Polynomial cubic;
    RealRoot root;                              // the simple real root t
    UabParameters<double> params;               // floating values
    std::optional<UabParameters<Rational>> exact_params; // when t is rational
    std::array<RealMatrix, 8> matrices;
    std::optional<std::array<RationalMatrix, 8>> exact_matrices;
    double cubic_residual = 0.0; // |cubic(t)| relative to coefficient size
};

/**
 * Closed-form MLE of U_{a,b} for a > b >= 0 outside the model. The
 * parameter t is the unique simple real root of the cubic; roots of higher
 * multiplicity are discarded.
 */
inline UabMle uab_closed_form_mle(long a, long b) {
    require_uab_params(a, b);
    if (a == b) throw DomainError("uab_closed_form_mle: need a > b");
    if (uab_in_model(a, b))
        throw DomainError("uab_closed_form_mle: U_{a,b} lies in the model; the eight boundary maxima do not apply");
    UabMle out;
    out.a = a;
    out.b = b;
    out.cubic = uab_cubic(a, b);
    auto roots = real_roots(simple_root_part(out.cubic));
    if (roots.empty()) throw NumericError("uab_closed_form_mle: cubic has no simple real root");
    if (roots.size() > 1) {
        std::string msg = "uab_closed_form_mle: several simple real roots:";
        for (const auto& r : roots) msg += " " + std::to_string(r.value);
        throw NumericError(msg);
    }
    out.root = roots.front();

    // Newton polish from the isolating interval's midpoint
    double t = out.root.value;
    if (!out.root.exact) {
        const Polynomial d = out.cubic.derivative();
        for (int it = 0; it < 4; ++it) {
            const double f = out.cubic.eval(t), fp = d.eval(t);
            if (fp == 0.0) break;
            const double nt = t - f / fp;
            if (nt < out.root.lo.get_d() || nt > out.root.hi.get_d()) break;
            t = nt;
        }
    }
    double cmax = 0.0;
    for (const auto& c : out.cubic.coeffs()) cmax = std::max(cmax, std::fabs(c.get_d()));
    out.cubic_residual = std::fabs(out.cubic.eval(t)) / (cmax * std::max(1.0, std::pow(std::fabs(t), 3)));

    const double ad = static_cast<double>(a), bd = static_cast<double>(b);
    out.params = uab_parameters(ad, bd, t);
    out.matrices = uab_mle_matrices(ad, bd, out.params);
    if (out.root.exact) {
        const Rational A(a), B(b);
        out.exact_params = uab_parameters(A, B, *out.root.exact);
        auto M = uab_mle_matrices(A, B, *out.exact_params);
        for (auto& m : M) m = canonical(m);
        out.exact_matrices = M;
    }
    return out;
}

template <typename T> Matrix<T> rectangle_family(const T& a, const T& b) {
    const T one(1);
    Matrix<T> P{{one - a, one + a, one + a, one - a},
                {one - b, one - b, one + b, one + b},
                {one + a, one - a, one - a, one + a},
                {one + b, one + b, one - b, one - b}};
    if constexpr (std::is_same_v<T, Rational>) return canonical(P);
    else return P;
}

inline bool rectangle_in_model(const Rational& a, const Rational& b) { return a * b + a + b <= 1; }

namespace detail {
inline const RationalMatrix& green_base() {
    static const RationalMatrix M{{51, 9, 64, 9}, {27, 63, 8, 8}, {3, 34, 40, 31}, {30, 25, 80, 35}};
    return M;
}
inline const RationalMatrix& green_x() {
    static const RationalMatrix M{{1, 1, 3, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 1}};
    return M;
}
inline const RationalMatrix& green_y() {
    static const RationalMatrix M{{5, 4, 1, 1}, {5, 1, 5, 1}, {1, 5, 1, 5}, {1, 1, 5, 5}};
    return M;
}
} // namespace detail

inline RationalMatrix greencurve_matrix(const Rational& x, const Rational& y) {
    return canonical(detail::green_base() + detail::green_x() * x + detail::green_y() * y);
}

inline RealMatrix greencurve_matrix(double x, double y) {
    return to_real(detail::green_base()) + to_real(detail::green_x()) * x +
           to_real(detail::green_y()) * y;
}

// det P(x0 + dx*s, y0 + dy*s) as an exact quartic in s.
inline Polynomial greencurve_det_along(const Rational& x0, const Rational& y0, const Rational& dx,
                                       const Rational& dy) {
    // interpolate through s = 0..4 (Lagrange, exact)
    std::vector<Rational> xs, ys;
    for (long k = 0; k <= 4; ++k) {
        xs.emplace_back(k);
        ys.push_back(determinant(greencurve_matrix(x0 + dx * k, y0 + dy * k)));
    }
    Polynomial acc;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Polynomial term({ys[i]});
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (j == i) continue;
            const Rational den = xs[i] - xs[j];
            term = term * Polynomial({-xs[j] / den, 1 / den});
        }
        acc = acc + term;
    }
    return acc;
}

// Root of det along the line x + 5y + 8 = 0 nearest to y0.
inline std::pair<double, double> greencurve_line_point(double y0) {
    // x = -8 - 5y, parametrized by y
    auto q = greencurve_det_along(Rational(-8), Rational(0), Rational(-5), Rational(1));
    auto roots = real_roots(q);
    if (roots.empty()) throw NumericError("greencurve_line_point: no real root on the line");
    const RealRoot* best = &roots.front();
    for (const auto& r : roots)
        if (std::fabs(r.value - y0) < std::fabs(best->value - y0)) best = &r;
    return {-8.0 - 5.0 * best->value, best->value};
}

/**
 * Rational rank-3 matrix on the curve det P(x, y) = 0 at abscissa x, with y
 * the curve root nearest y_guess. y is rounded to `den`, then the last row is
 * replaced by its exact projection onto the span of the other rows.
 */
inline RationalMatrix greencurve_curve_point(const Rational& x, double y_guess,
                                             const Rational& den = Rational(Integer("1000000000000000000000000"))) {
    auto q = greencurve_det_along(x, Rational(0), Rational(0), Rational(1));
    auto roots = real_roots(q);
    if (roots.empty()) throw NumericError("greencurve_curve_point: no curve point at this x");
    const RealRoot* best = &roots.front();
    for (const auto& r : roots)
        if (std::fabs(r.value - y_guess) < std::fabs(best->value - y_guess)) best = &r;
    Rational y = best->exact ? *best->exact : (best->lo + best->hi) / 2;
    if (!best->exact) {
        Integer num;
        Rational scaled = y * den;
        mpz_fdiv_q(num.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
        y = Rational(num) / den;
        y.canonicalize();
    }
    RationalMatrix P = greencurve_matrix(x, y);
    if (sgn(determinant(P)) == 0) return P;
    const RationalMatrix R = P.select_rows({0, 1, 2});
    RationalMatrix last(1, 4);
    for (std::size_t j = 0; j < 4; ++j) last(0, j) = P(3, j);
    // projection of the last row onto the row space of R
    const RationalMatrix G = R * R.transpose();
    const RationalMatrix coef = solve(G, R * last.transpose());
    const RationalMatrix proj = coef.transpose() * R;
    for (std::size_t j = 0; j < 4; ++j) P(3, j) = proj(0, j);
    return canonical(P);
}

} // namespace mixrank::families
