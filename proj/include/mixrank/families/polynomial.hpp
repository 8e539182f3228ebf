#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/scalar.hpp"

namespace mixrank::families {

// Univariate polynomial over Q, coefficients from the constant term up.
class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(std::vector<Rational> c) : c_(std::move(c)) { trim(); }

    static Polynomial monomial(const Rational& coeff, std::size_t deg) {
        std::vector<Rational> c(deg + 1, Rational(0));
        c[deg] = coeff;
        return Polynomial(std::move(c));
    }

    bool is_zero() const { return c_.empty(); }
    // degree of the zero polynomial is reported as 0
    std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }
    const std::vector<Rational>& coeffs() const { return c_; }
    Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }

    Rational operator()(const Rational& x) const {
        Rational acc = 0;
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k];
        return acc;
    }

    double eval(double x) const {
        double acc = 0.0;
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k].get_d();
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<Rational> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * Rational(static_cast<long>(k));
        return Polynomial(std::move(d));
    }

    friend Polynomial operator+(const Polynomial& p, const Polynomial& q) {
        std::vector<Rational> c(std::max(p.c_.size(), q.c_.size()), Rational(0));
        for (std::size_t k = 0; k < p.c_.size(); ++k) c[k] += p.c_[k];
        for (std::size_t k = 0; k < q.c_.size(); ++k) c[k] += q.c_[k];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator-(const Polynomial& p, const Polynomial& q) {
        return p + q * Polynomial({Rational(-1)});
    }

    friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
        if (p.is_zero() || q.is_zero()) return {};
        std::vector<Rational> c(p.c_.size() + q.c_.size() - 1, Rational(0));
        for (std::size_t i = 0; i < p.c_.size(); ++i)
            for (std::size_t j = 0; j < q.c_.size(); ++j) c[i + j] += p.c_[i] * q.c_[j];
        return Polynomial(std::move(c));
    }

    // Euclidean division: p = quot * q + rem.
    static std::pair<Polynomial, Polynomial> divmod(const Polynomial& p, const Polynomial& q) {
        if (q.is_zero()) throw DomainError("Polynomial: division by zero polynomial");
        std::vector<Rational> rem = p.c_;
        if (rem.size() < q.c_.size()) return {Polynomial(), p};
        std::vector<Rational> quot(rem.size() - q.c_.size() + 1, Rational(0));
        const Rational lead = q.c_.back();
        for (std::size_t k = quot.size(); k-- > 0;) {
            const Rational f = rem[k + q.c_.size() - 1] / lead;
            quot[k] = f;
            for (std::size_t j = 0; j < q.c_.size(); ++j) rem[k + j] -= f * q.c_[j];
        }
        return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
    }

    Polynomial monic() const {
        if (is_zero()) return {};
        std::vector<Rational> c = c_;
        const Rational l = c.back();
        for (auto& x : c) x /= l;
        return Polynomial(std::move(c));
    }

    static Polynomial gcd(Polynomial p, Polynomial q) {
        while (!q.is_zero()) {
            auto r = divmod(p, q).second;
            p = std::move(q);
            q = std::move(r);
        }
        return p.monic();
    }

  private:
    void trim() {
        for (auto& x : c_) x.canonicalize();
        while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
    }
    std::vector<Rational> c_;
};

// A real root: exact when rational, otherwise an isolating interval.
struct RealRoot {
    Rational lo, hi;               // lo <= root <= hi
    std::optional<Rational> exact; // set when the root is rational
    double value = 0.0;
};

namespace detail {

inline Rational floor_q(const Rational& x) {
    Integer f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return Rational(f);
}

// Smallest-denominator rational in [x, y].
inline Rational simplest_between(Rational x, Rational y) {
    if (x > y) std::swap(x, y);
    if (sgn(x) <= 0 && sgn(y) >= 0) return Rational(0);
    if (sgn(y) < 0) return -simplest_between(-y, -x);
    const Rational fx = floor_q(x);
    if (fx == x) return x;
    if (fx + 1 <= y) return fx + 1;
    return fx + 1 / simplest_between(1 / (y - fx), 1 / (x - fx));
}

inline int sign_changes(const std::vector<Polynomial>& seq, const Rational& x) {
    int changes = 0, last = 0;
    for (const auto& p : seq) {
        const int s = sgn(p(x));
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

} // namespace detail

inline std::vector<Polynomial> sturm_sequence(const Polynomial& p) {
    std::vector<Polynomial> seq{p, p.derivative()};
    while (!seq.back().is_zero()) {
        auto r = Polynomial::divmod(seq[seq.size() - 2], seq.back()).second;
        if (r.is_zero()) break;
        seq.push_back(r * Polynomial({Rational(-1)}));
    }
    return seq;
}

// Number of distinct real roots in (lo, hi], lo and hi not roots.
inline int count_roots(const std::vector<Polynomial>& seq, const Rational& lo, const Rational& hi) {
    return detail::sign_changes(seq, lo) - detail::sign_changes(seq, hi);
}

// Squarefree part p / gcd(p, p').
inline Polynomial squarefree(const Polynomial& p) {
    return Polynomial::divmod(p, Polynomial::gcd(p, p.derivative())).first;
}

// Product of the linear factors of p that occur with multiplicity exactly one.
inline Polynomial simple_root_part(const Polynomial& p) {
    const Polynomial g = Polynomial::gcd(p, p.derivative());
    const Polynomial h = Polynomial::divmod(p, g).first;
    return Polynomial::divmod(h, Polynomial::gcd(h, g)).first;
}

/**
 * Distinct real roots of p in increasing order, each isolated to an interval
 * of width below `width` and checked for being a small-height rational.
 */
inline std::vector<RealRoot> real_roots(const Polynomial& p, const Rational& width = Rational(1, 1) / Rational(Integer(1) << 100)) {
    if (p.is_zero()) throw DomainError("real_roots: zero polynomial");
    const Polynomial q = squarefree(p);
    if (q.degree() == 0) return {};
    // Cauchy bound
    Rational bound = 0;
    for (const auto& c : q.coeffs()) {
        Rational a = abs(Rational(c / q.leading()));
        if (a > bound) bound = a;
    }
    bound += 1;
    const auto seq = sturm_sequence(q);
    std::vector<std::pair<Rational, Rational>> stack{{-bound, bound}};
    std::vector<RealRoot> roots;
    while (!stack.empty()) {
        auto [lo, hi] = stack.back();
        stack.pop_back();
        const int n = count_roots(seq, lo, hi);
        if (n == 0) continue;
        if (n == 1) {
            RealRoot r;
            Rational a = lo, b = hi;
            const int sb = sgn(q(b));
            if (sb == 0) {
                r.exact = b;
                r.lo = r.hi = b;
            } else {
                while (b - a > width) {
                    Rational mid = (a + b) / 2;
                    const int sm = sgn(q(mid));
                    if (sm == 0) {
                        a = b = mid;
                        r.exact = mid;
                        break;
                    }
                    if (sm == sb) b = mid;
                    else a = mid;
                }
                r.lo = a;
                r.hi = b;
                if (!r.exact) {
                    Rational cand = detail::simplest_between(a, b);
                    if (sgn(q(cand)) == 0) r.exact = cand;
                }
            }
            r.value = r.exact ? r.exact->get_d() : Rational((r.lo + r.hi) / 2).get_d();
            roots.push_back(std::move(r));
            continue;
        }
        Rational mid = (lo + hi) / 2;
        if (sgn(q(mid)) == 0) {
            // nudge so the split point is not a root
            mid += (hi - lo) / 1024;
        }
        stack.push_back({lo, mid});
        stack.push_back({mid, hi});
    }
    std::sort(roots.begin(), roots.end(), [](const RealRoot& x, const RealRoot& y) { return x.lo < y.lo; });
    return roots;
}

} // namespace mixrank::families
