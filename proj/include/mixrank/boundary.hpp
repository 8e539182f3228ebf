#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/random.hpp"
#include "mixrank/rank3cert/membership.hpp"

// Boundary of the rank-3 mixture model: the topological boundary test,
// component counts of the algebraic boundary and its zero-pattern strata.

namespace mixrank::boundary {

using rank3::Witness;
using rank3::WitnessContact;

enum class Status { interior, boundary, outside_model };
enum class Reason { none, zero_entry, touching_witnesses, not_member };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::interior: return "interior";
    case Status::boundary: return "boundary";
    case Status::outside_model: return "outside_model";
    }
    return "?";
}

inline const char* to_string(Reason r) {
    switch (r) {
    case Reason::none: return "none";
    case Reason::zero_entry: return "zero_entry";
    case Reason::touching_witnesses: return "touching_witnesses";
    case Reason::not_member: return "not_member";
    }
    return "?";
}

struct BoundaryClassification {
    Status status = Status::interior;
    Reason reason = Reason::none;
    std::size_t rank = 0;
    // Every passing witness with its contact triple; for boundary-by-contact
    // all of them have touching = true.
    std::vector<WitnessContact> witnesses;
};

/**
 * Topological boundary test for a nonnegative rational matrix of
 * nonnegative rank <= 3. A member is on the boundary when it has a zero
 * entry, or it has rank 3 and every passing witness triangle meets the
 * column polygon on its third edge.
 */
inline BoundaryClassification boundary_test(const RationalMatrix& input) {
    const RationalMatrix P = canonical(input);
    if (P.empty()) throw DimensionError("boundary_test: empty matrix");
    if (!all_nonnegative(P)) throw DomainError("boundary_test: matrix has a negative entry");
    BoundaryClassification c;
    const auto member = rank3::nnrank3_membership(P, {.log_failures = false});
    c.rank = member.rank;
    if (!rank3::is_member(member.verdict)) {
        c.status = Status::outside_model;
        c.reason = Reason::not_member;
        return c;
    }
    if (has_zero_entry(P)) {
        c.status = Status::boundary;
        c.reason = Reason::zero_entry;
        return c;
    }
    if (c.rank < 3) return c;
    auto survey = rank3::survey_witnesses(P);
    c.witnesses = std::move(survey.passing);
    bool all_touch = !c.witnesses.empty();
    for (const auto& w : c.witnesses) all_touch = all_touch && w.touching;
    if (all_touch) {
        c.status = Status::boundary;
        c.reason = Reason::touching_witnesses;
    }
    return c;
}

struct ComponentCount {
    Integer zero_entry; // m n coordinate hyperplanes
    Integer kind_a;     // 36 C(m,3) C(n,4)
    Integer kind_b;     // 36 C(m,4) C(n,3)
    Integer total;      // closed formula
    long stratum_dimension = 0; // 3m + 3n - 11
};

inline Integer binomial(unsigned long n, unsigned long k) {
    Integer r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

// Irreducible components of the algebraic boundary for m x n, rank 3.
inline ComponentCount component_count(std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw DomainError("component_count: dimensions must be positive");
    ComponentCount c;
    const Integer M(static_cast<unsigned long>(m)), N(static_cast<unsigned long>(n));
    c.zero_entry = M * N;
    c.kind_a = 36 * binomial(m, 3) * binomial(n, 4);
    c.kind_b = 36 * binomial(m, 4) * binomial(n, 3);
    Integer prod = M * (M - 1) * (M - 2) * (M + N - 6) * N * (N - 1) * (N - 2);
    c.total = c.zero_entry + prod / 4;
    c.stratum_dimension = 3 * static_cast<long>(m) + 3 * static_cast<long>(n) - 11;
    return c;
}

using Position = std::pair<std::size_t, std::size_t>;

/**
 * Zero positions in A (m x 3) and B (3 x n) of a boundary stratum.
 * Kind a: three zeros of A in distinct rows and columns, four zeros of B in
 * distinct columns covering all three rows. Kind b is the transpose.
 */
struct ZeroPattern {
    char kind = 'a';
    std::size_t m = 0, n = 0;
    std::vector<Position> a_zeros;
    std::vector<Position> b_zeros;

    bool valid() const {
        // kind b: A carries the four zeros, B the three
        const auto& three = kind == 'a' ? a_zeros : b_zeros;
        const auto& four = kind == 'a' ? b_zeros : a_zeros;
        if (three.size() != 3 || four.size() != 4) return false;
        auto lines3 = [&](const Position& p) { return kind == 'a' ? p : Position{p.second, p.first}; };
        auto lines4 = [&](const Position& p) { return kind == 'a' ? p : Position{p.second, p.first}; };
        // in kind-a orientation: three = (row < m, col < 3), four = (row < 3, col < n)
        const std::size_t outer3 = kind == 'a' ? m : n, outer4 = kind == 'a' ? n : m;
        std::vector<bool> r3(outer3, false), c3(3, false), r4(3, false), c4(outer4, false);
        for (const auto& p : three) {
            auto q = lines3(p);
            if (q.first >= outer3 || q.second >= 3 || r3[q.first] || c3[q.second]) return false;
            r3[q.first] = c3[q.second] = true;
        }
        for (const auto& p : four) {
            auto q = lines4(p);
            if (q.first >= 3 || q.second >= outer4 || c4[q.second]) return false;
            r4[q.first] = c4[q.second] = true;
        }
        return r4[0] && r4[1] && r4[2];
    }
};

namespace detail {

inline std::vector<ZeroPattern> kind_a_patterns(std::size_t m, std::size_t n) {
    std::vector<ZeroPattern> out;
    if (m < 3 || n < 4) return out;
    for (std::size_t r1 = 0; r1 < m; ++r1)
        for (std::size_t r2 = r1 + 1; r2 < m; ++r2)
            for (std::size_t r3 = r2 + 1; r3 < m; ++r3)
                for (std::size_t two = 0; two < 3; ++two) {
                    const std::size_t o1 = (two + 1) % 3, o2 = (two + 2) % 3;
                    const std::size_t lo = std::min(o1, o2), hi = std::max(o1, o2);
                    for (std::size_t c1 = 0; c1 < n; ++c1)
                        for (std::size_t c2 = c1 + 1; c2 < n; ++c2)
                            for (std::size_t d1 = 0; d1 < n; ++d1)
                                for (std::size_t d2 = 0; d2 < n; ++d2) {
                                    if (d1 == c1 || d1 == c2 || d2 == c1 || d2 == c2 || d1 == d2)
                                        continue;
                                    ZeroPattern p;
                                    p.kind = 'a';
                                    p.m = m;
                                    p.n = n;
                                    p.a_zeros = {{r1, 0}, {r2, 1}, {r3, 2}};
                                    p.b_zeros = {{two, c1}, {two, c2}, {lo, d1}, {hi, d2}};
                                    out.push_back(std::move(p));
                                }
                }
    return out;
}

} // namespace detail

// All zero patterns of kinds a and b, with the columns of A (rows of B)
// normalized so each stratum appears once.
inline std::vector<ZeroPattern> enumerate_zero_patterns(std::size_t m, std::size_t n) {
    auto out = detail::kind_a_patterns(m, n);
    for (const auto& t : detail::kind_a_patterns(n, m)) {
        ZeroPattern p;
        p.kind = 'b';
        p.m = m;
        p.n = n;
        for (const auto& [r, c] : t.b_zeros) p.a_zeros.push_back({c, r});
        for (const auto& [r, c] : t.a_zeros) p.b_zeros.push_back({c, r});
        out.push_back(std::move(p));
    }
    return out;
}

struct EntryDistribution {
    enum class Kind { rational, unit_interval, small_integer };
    Kind kind = Kind::rational;
    long max_height = 100; // rational kinds: numerator and denominator in 1..N
    long lo = 1, hi = 4;   // small_integer

    // p/q with p, q independent and uniform in 1..N.
    static EntryDistribution rational(long n = 100) { return {Kind::rational, n, 1, 4}; }
    // p/q uniform over pairs 1 <= p <= q <= N.
    static EntryDistribution unit_interval(long n = 100) { return {Kind::unit_interval, n, 1, 4}; }
    static EntryDistribution small_integer(long lo = 1, long hi = 4) {
        return {Kind::small_integer, 100, lo, hi};
    }

    Rational draw(Rng& rng) const {
        if (kind == Kind::small_integer) return Rational(uniform_int(rng, lo, hi));
        long p = uniform_int(rng, 1, max_height), q = uniform_int(rng, 1, max_height);
        if (kind == Kind::unit_interval)
            while (p > q) {
                p = uniform_int(rng, 1, max_height);
                q = uniform_int(rng, 1, max_height);
            }
        Rational x(p, q);
        x.canonicalize();
        return x;
    }

    std::string name() const {
        switch (kind) {
        case Kind::small_integer: return "integer(" + std::to_string(lo) + ".." + std::to_string(hi) + ")";
        case Kind::unit_interval: return "unit_interval(N=" + std::to_string(max_height) + ")";
        case Kind::rational: break;
        }
        return "rational(N=" + std::to_string(max_height) + ")";
    }
};

// The stratum sampled by the boundary-fraction experiment: A zero at
// (0,0), (1,1), (2,2); B zero at (0,0), (0,1), (1,2), (2,3).
inline ZeroPattern reference_pattern(std::size_t m = 4, std::size_t n = 4) {
    if (m < 3 || n < 4) throw DomainError("reference_pattern: needs m >= 3 and n >= 4");
    ZeroPattern p;
    p.m = m;
    p.n = n;
    p.a_zeros = {{0, 0}, {1, 1}, {2, 2}};
    p.b_zeros = {{0, 0}, {0, 1}, {1, 2}, {2, 3}};
    return p;
}

struct BoundarySample {
    RationalMatrix P; // sums to 1, P = A B exactly
    RationalMatrix A;
    RationalMatrix B;
};

/**
 * Random point on the stratum of `pattern`: positive draws off the zero
 * positions, then B is divided by the total so that A B sums to one.
 */
inline BoundarySample sample_algebraic_boundary(const ZeroPattern& pattern, Rng& rng,
                                                const EntryDistribution& dist) {
    if (!pattern.valid()) throw DomainError("sample_algebraic_boundary: invalid pattern");
    RationalMatrix A(pattern.m, 3), B(3, pattern.n);
    std::vector<bool> za(A.size(), false), zb(B.size(), false);
    for (const auto& [r, c] : pattern.a_zeros) za[r * 3 + c] = true;
    for (const auto& [r, c] : pattern.b_zeros) zb[r * pattern.n + c] = true;
    for (std::size_t k = 0; k < A.size(); ++k)
        if (!za[k]) A.data()[k] = dist.draw(rng);
    for (std::size_t k = 0; k < B.size(); ++k)
        if (!zb[k]) B.data()[k] = dist.draw(rng);
    const Rational total = (A * B).sum();
    B /= total;
    return {A * B, std::move(A), std::move(B)};
}

// Same, with explicit entries for the free positions (row-major, A then B).
inline BoundarySample fill_pattern(const ZeroPattern& pattern, const std::vector<Rational>& values,
                                   bool normalize = true) {
    if (!pattern.valid()) throw DomainError("fill_pattern: invalid pattern");
    RationalMatrix A(pattern.m, 3), B(3, pattern.n);
    std::vector<bool> za(A.size(), false), zb(B.size(), false);
    for (const auto& [r, c] : pattern.a_zeros) za[r * 3 + c] = true;
    for (const auto& [r, c] : pattern.b_zeros) zb[r * pattern.n + c] = true;
    std::size_t next = 0;
    auto take = [&]() {
        if (next >= values.size()) throw DimensionError("fill_pattern: too few values");
        return values[next++];
    };
    for (std::size_t k = 0; k < A.size(); ++k)
        if (!za[k]) A.data()[k] = take();
    for (std::size_t k = 0; k < B.size(); ++k)
        if (!zb[k]) B.data()[k] = take();
    if (next != values.size()) throw DimensionError("fill_pattern: too many values");
    if (normalize) B /= (A * B).sum();
    return {A * B, std::move(A), std::move(B)};
}

} // namespace mixrank::boundary
