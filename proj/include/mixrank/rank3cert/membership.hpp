#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/exactla/matrix.hpp"
#include "mixrank/rank3cert/brackets.hpp"

namespace mixrank::rank3 {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
inline constexpr double kDefaultSignTol = 1e-9;

enum class Verdict { in, out, rank_deficient_in };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::in: return "in";
    case Verdict::out: return "out";
    case Verdict::rank_deficient_in: return "rank_deficient_in";
    }
    return "?";
}

inline bool is_member(Verdict v) { return v != Verdict::out; }

/**
 * Witness indices. Unswapped: i, j are rows of P (lines a_i, a_j) and
 * iprime, jprime columns of P. Swapped: the roles of rows and columns are
 * exchanged. Indices refer to the caller's matrix, zero-based.
 */
struct Witness {
    std::size_t i = 0, j = 0, iprime = 0, jprime = 0;
    bool swapped = false;
    friend bool operator==(const Witness&, const Witness&) = default;
};

enum class Condition {
    parallel_lines,   // a_i ^ a_j = 0
    degenerate_line,  // b_iprime or b_jprime coincides with the vertex
    vertex,           // det(a_i, a_j, a_k) changes sign
    support_first,    // meet_join(i, j, iprime, k') changes sign
    support_second,   // meet_join(i, j, jprime, k') changes sign
    six_three,        // product of the two (6,3) brackets negative
};

inline const char* to_string(Condition c) {
    switch (c) {
    case Condition::parallel_lines: return "parallel_lines";
    case Condition::degenerate_line: return "degenerate_line";
    case Condition::vertex: return "vertex";
    case Condition::support_first: return "support_first";
    case Condition::support_second: return "support_second";
    case Condition::six_three: return "six_three";
    }
    return "?";
}

// First violated condition of a rejected candidate; unused indices are npos.
struct FailedCondition {
    Witness candidate;
    Condition condition;
    std::size_t k = npos, l = npos, kprime = npos;
};

struct MembershipDecision {
    Verdict verdict = Verdict::out;
    std::optional<Witness> witness;
    std::vector<FailedCondition> failure_log;
    std::size_t rank = 0;
    Backend backend = Backend::exact;
    bool marginal = false; // float backend: some sign fell inside the zero band
};

// A passing witness together with the first (k, l, k') whose six_three
// product vanishes, if any.
struct WitnessContact {
    Witness witness;
    bool touching = false;
    std::size_t k = npos, l = npos, kprime = npos;
};

struct WitnessSurvey {
    std::size_t rank = 0;
    Backend backend = Backend::exact;
    bool marginal = false;
    std::vector<WitnessContact> passing; // all passing witnesses, both orientations
};

struct MembershipOptions {
    bool log_failures = true;
    double sign_tol = kDefaultSignTol; // float backend only
    double rank_tol = kDefaultRankTol; // float backend only
};

namespace detail {

// Lines a and points b of one orientation, with ids back into the input.
template <typename T> struct Frame {
    std::vector<Vec3<T>> a;
    std::vector<Vec3<T>> b;
    std::vector<std::size_t> a_ids, b_ids;
    bool swapped = false;
};

template <typename T> struct SignOracle;

template <> struct SignOracle<Integer> {
    bool marginal = false;
    template <typename F> explicit SignOracle(const F&, double = 0.0) {}
    int operator()(const Integer& v, int, int) { return sgn(v); }
};

// Values below tol * scaleA^dA * scaleB^dB count as zero.
template <> struct SignOracle<double> {
    double sa = 1.0, sb = 1.0, tol = kDefaultSignTol;
    bool marginal = false;
    SignOracle(const Frame<double>& f, double t) : tol(t) {
        sa = sb = 0.0;
        for (const auto& x : f.a)
            for (double c : x) sa = std::max(sa, std::fabs(c));
        for (const auto& x : f.b)
            for (double c : x) sb = std::max(sb, std::fabs(c));
        if (sa == 0.0) sa = 1.0;
        if (sb == 0.0) sb = 1.0;
    }
    int operator()(double v, int da, int db) {
        const double band = tol * std::pow(sa, da) * std::pow(sb, db);
        if (std::fabs(v) <= band) {
            if (v != 0.0) marginal = true;
            return 0;
        }
        return v > 0 ? 1 : -1;
    }
};

template <typename T, typename Oracle> bool is_zero_vec(const Vec3<T>& v, Oracle& sg, int da, int db) {
    return sg(v[0], da, db) == 0 && sg(v[1], da, db) == 0 && sg(v[2], da, db) == 0;
}

// Tracks "same sign or zero" over a family of values.
struct SignFamily {
    int seen = 0;
    bool add(int s) {
        if (s == 0) return true;
        if (seen == 0) {
            seen = s;
            return true;
        }
        return s == seen;
    }
};

/**
 * Checks one candidate (i, j, ip, jp) in frame coordinates. On failure
 * fills `fail` (if given). On success fills `contact` with the first
 * vanishing six_three product (if given).
 */
template <typename T, typename Oracle>
bool check_candidate(const Frame<T>& f, std::size_t i, std::size_t j, std::size_t ip,
                     std::size_t jp, Oracle& sg, FailedCondition* fail, WitnessContact* contact) {
    const std::size_t m = f.a.size(), n = f.b.size();
    auto reject = [&](Condition c, std::size_t k, std::size_t l, std::size_t kp) {
        if (fail) {
            fail->condition = c;
            fail->k = k == npos ? npos : f.a_ids[k];
            fail->l = l == npos ? npos : f.a_ids[l];
            fail->kprime = kp == npos ? npos : f.b_ids[kp];
        }
        return false;
    };
    const Vec3<T> v = cross(f.a[i], f.a[j]);
    if (is_zero_vec(v, sg, 2, 0)) return reject(Condition::parallel_lines, npos, npos, npos);
    const Vec3<T> L1 = cross(v, f.b[ip]);
    const Vec3<T> L2 = cross(v, f.b[jp]);
    if (is_zero_vec(L1, sg, 2, 1)) return reject(Condition::degenerate_line, npos, npos, ip);
    if (is_zero_vec(L2, sg, 2, 1)) return reject(Condition::degenerate_line, npos, npos, jp);

    SignFamily fam;
    for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        if (!fam.add(sg(dot(v, f.a[k]), 3, 0))) return reject(Condition::vertex, k, npos, npos);
    }
    SignFamily s1, s2;
    for (std::size_t kp = 0; kp < n; ++kp) {
        if (kp == ip) continue;
        if (!s1.add(sg(dot(L1, f.b[kp]), 2, 2)))
            return reject(Condition::support_first, npos, npos, kp);
    }
    for (std::size_t kp = 0; kp < n; ++kp) {
        if (kp == jp) continue;
        if (!s2.add(sg(dot(L2, f.b[kp]), 2, 2)))
            return reject(Condition::support_second, npos, npos, kp);
    }

    std::vector<Vec3<T>> p(m), q(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        p[k] = cross(L1, f.a[k]);
        q[k] = cross(L2, f.a[k]);
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        for (std::size_t l = k + 1; l < m; ++l) {
            if (l == i || l == j) continue;
            const Vec3<T> pq = cross(p[k], q[l]);
            const Vec3<T> qp = cross(p[l], q[k]);
            for (std::size_t kp = 0; kp < n; ++kp) {
                if (kp == ip || kp == jp) continue;
                const int x = sg(dot(pq, f.b[kp]), 6, 3);
                const int y = sg(dot(qp, f.b[kp]), 6, 3);
                if (x * y < 0) return reject(Condition::six_three, k, l, kp);
                if ((x == 0 || y == 0) && contact && !contact->touching) {
                    contact->touching = true;
                    contact->k = f.a_ids[k];
                    contact->l = f.a_ids[l];
                    contact->kprime = f.b_ids[kp];
                }
            }
        }
    }
    return true;
}

template <typename T> Witness to_witness(const Frame<T>& f, std::size_t i, std::size_t j,
                                          std::size_t ip, std::size_t jp) {
    return {f.a_ids[i], f.a_ids[j], f.b_ids[ip], f.b_ids[jp], f.swapped};
}

// Visits candidates in lexicographic (i < j, ip != jp) order; stops when
// `visit` returns false.
template <typename T, typename Visit> void for_each_candidate(const Frame<T>& f, Visit visit) {
    const std::size_t m = f.a.size(), n = f.b.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            for (std::size_t ip = 0; ip < n; ++ip)
                for (std::size_t jp = 0; jp < n; ++jp) {
                    if (ip == jp) continue;
                    if (!visit(i, j, ip, jp)) return;
                }
}

template <typename T>
Frame<T> make_frame(const Matrix<T>& A, const Matrix<T>& B, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols, bool swapped) {
    Frame<T> f;
    f.swapped = swapped;
    if (!swapped) {
        for (std::size_t i = 0; i < A.rows(); ++i) f.a.push_back(row3(A, i));
        for (std::size_t j = 0; j < B.cols(); ++j) f.b.push_back(col3(B, j));
        f.a_ids = rows;
        f.b_ids = cols;
    } else {
        for (std::size_t j = 0; j < B.cols(); ++j) f.a.push_back(col3(B, j));
        for (std::size_t i = 0; i < A.rows(); ++i) f.b.push_back(row3(A, i));
        f.a_ids = cols;
        f.b_ids = rows;
    }
    return f;
}

// Integer vectors proportional (by positive factors) to rational rows of A
// and columns of B; the test is invariant under such rescaling.
inline std::pair<Matrix<Integer>, Matrix<Integer>> integerize(const RationalMatrix& A,
                                                              const RationalMatrix& B) {
    auto scale = [](std::vector<Rational> xs) {
        Integer l = 1, g = 0;
        for (const auto& x : xs) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
        std::vector<Integer> out;
        for (const auto& x : xs) {
            Rational y = x * Rational(l);
            out.push_back(y.get_num());
            mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), out.back().get_mpz_t());
        }
        if (g > 1)
            for (auto& z : out) mpz_divexact(z.get_mpz_t(), z.get_mpz_t(), g.get_mpz_t());
        return out;
    };
    Matrix<Integer> Ai(A.rows(), 3), Bi(3, B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        auto r = scale({A(i, 0), A(i, 1), A(i, 2)});
        for (std::size_t c = 0; c < 3; ++c) Ai(i, c) = r[c];
    }
    for (std::size_t j = 0; j < B.cols(); ++j) {
        auto c = scale({B(0, j), B(1, j), B(2, j)});
        for (std::size_t r = 0; r < 3; ++r) Bi(r, j) = c[r];
    }
    return {Ai, Bi};
}

template <typename T> struct Prepared {
    Matrix<T> P;                            // with zero rows and columns removed
    std::vector<std::size_t> rows, cols;    // ids of the kept rows and columns
    std::size_t rank = 0;
};

template <typename T> Prepared<T> strip_zero_lines(const Matrix<T>& P) {
    if (P.empty()) throw DimensionError("nnrank3_membership: empty matrix");
    for (const auto& v : P.data())
        if (ScalarTraits<T>::sign(v) < 0)
            throw DomainError("nnrank3_membership: matrix has a negative entry");
    Prepared<T> out;
    for (std::size_t i = 0; i < P.rows(); ++i) {
        bool nz = false;
        for (std::size_t j = 0; j < P.cols(); ++j) nz = nz || !ScalarTraits<T>::is_zero(P(i, j));
        if (nz) out.rows.push_back(i);
    }
    for (std::size_t j = 0; j < P.cols(); ++j) {
        bool nz = false;
        for (std::size_t i = 0; i < P.rows(); ++i) nz = nz || !ScalarTraits<T>::is_zero(P(i, j));
        if (nz) out.cols.push_back(j);
    }
    if (!out.rows.empty()) out.P = P.select_rows(out.rows).select_cols(out.cols);
    return out;
}

// Runs the search over both orientations of the factorization A B.
template <typename T, typename Visit>
void search_frames(const Matrix<T>& A, const Matrix<T>& B, const std::vector<std::size_t>& rows,
                   const std::vector<std::size_t>& cols, double sign_tol, bool& marginal,
                   Visit visit) {
    for (bool swapped : {false, true}) {
        auto f = make_frame(A, B, rows, cols, swapped);
        SignOracle<T> sg(f, sign_tol);
        bool stop = false;
        for_each_candidate(f, [&](std::size_t i, std::size_t j, std::size_t ip, std::size_t jp) {
            stop = !visit(f, sg, i, j, ip, jp);
            return !stop;
        });
        marginal = marginal || sg.marginal;
        if (stop) return;
    }
}

template <typename T>
MembershipDecision decide(const Matrix<T>& A, const Matrix<T>& B,
                          const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols, const MembershipOptions& opts) {
    MembershipDecision d;
    d.rank = 3;
    d.backend = std::is_same_v<T, double> ? Backend::floating : Backend::exact;
    search_frames(A, B, rows, cols, opts.sign_tol, d.marginal,
                  [&](const Frame<T>& f, SignOracle<T>& sg, std::size_t i, std::size_t j,
                      std::size_t ip, std::size_t jp) {
                      FailedCondition fc{to_witness(f, i, j, ip, jp), Condition::vertex};
                      if (check_candidate(f, i, j, ip, jp, sg, opts.log_failures ? &fc : nullptr,
                                          nullptr)) {
                          d.witness = to_witness(f, i, j, ip, jp);
                          return false;
                      }
                      if (opts.log_failures) d.failure_log.push_back(fc);
                      return true;
                  });
    d.verdict = d.witness ? Verdict::in : Verdict::out;
    return d;
}

template <typename T>
WitnessSurvey survey(const Matrix<T>& A, const Matrix<T>& B, const std::vector<std::size_t>& rows,
                     const std::vector<std::size_t>& cols, double sign_tol) {
    WitnessSurvey s;
    s.rank = 3;
    s.backend = std::is_same_v<T, double> ? Backend::floating : Backend::exact;
    search_frames(A, B, rows, cols, sign_tol, s.marginal,
                  [&](const Frame<T>& f, SignOracle<T>& sg, std::size_t i, std::size_t j,
                      std::size_t ip, std::size_t jp) {
                      WitnessContact c{to_witness(f, i, j, ip, jp)};
                      if (check_candidate(f, i, j, ip, jp, sg, nullptr, &c)) s.passing.push_back(c);
                      return true;
                  });
    return s;
}

inline std::vector<std::size_t> iota_ids(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = k;
    return v;
}

} // namespace detail

/**
 * Membership test for a given factorization P = A B (A m x 3, B 3 x n).
 * Requires A B >= 0. The verdict depends only on the product.
 */
inline MembershipDecision membership_of_factorization(const RationalMatrix& A,
                                                      const RationalMatrix& B,
                                                      const MembershipOptions& opts = {}) {
    detail::require_rank3_shapes(A, B);
    const RationalMatrix P = canonical(A * B);
    if (!all_nonnegative(P)) throw DomainError("membership: A*B has a negative entry");
    MembershipDecision d;
    d.rank = matrix_rank(P);
    if (d.rank < 3) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    auto [Ai, Bi] = detail::integerize(A, B);
    return detail::decide(Ai, Bi, detail::iota_ids(A.rows()), detail::iota_ids(B.cols()), opts);
}

inline MembershipDecision membership_of_factorization(const RealMatrix& A, const RealMatrix& B,
                                                      const MembershipOptions& opts = {}) {
    detail::require_rank3_shapes(A, B);
    const RealMatrix P = A * B;
    MembershipDecision d;
    d.backend = Backend::floating;
    d.rank = matrix_rank(P, opts.rank_tol);
    if (d.rank < 3) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    return detail::decide(A, B, detail::iota_ids(A.rows()), detail::iota_ids(B.cols()), opts);
}

/**
 * Decides whether the nonnegative matrix P has nonnegative rank at most 3.
 * Zero rows and columns are dropped first; witness indices refer to P.
 */
inline MembershipDecision nnrank3_membership(const RationalMatrix& P,
                                             const MembershipOptions& opts = {}) {
    auto prep = detail::strip_zero_lines(canonical(P));
    MembershipDecision d;
    if (prep.rows.empty()) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    d.rank = matrix_rank(prep.P);
    if (d.rank < 3) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    if (d.rank > 3) {
        d.verdict = Verdict::out;
        return d;
    }
    auto f = rank_factorize(prep.P, 3);
    auto [Ai, Bi] = detail::integerize(f.A, f.B);
    return detail::decide(Ai, Bi, prep.rows, prep.cols, opts);
}

inline MembershipDecision nnrank3_membership(const RealMatrix& P,
                                             const MembershipOptions& opts = {}) {
    for (double v : P.data())
        if (!std::isfinite(v)) throw DomainError("nnrank3_membership: non-finite entry");
    auto prep = detail::strip_zero_lines(P);
    MembershipDecision d;
    d.backend = Backend::floating;
    if (prep.rows.empty()) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    d.rank = matrix_rank(prep.P, opts.rank_tol);
    if (d.rank < 3) {
        d.verdict = Verdict::rank_deficient_in;
        return d;
    }
    if (d.rank > 3) {
        d.verdict = Verdict::out;
        return d;
    }
    auto f = rank_factorize(prep.P, 3, opts.rank_tol);
    return detail::decide(f.A, f.B, prep.rows, prep.cols, opts);
}

// Every passing witness of a rank-3 rational P, with contact information.
inline WitnessSurvey survey_witnesses(const RationalMatrix& P) {
    auto prep = detail::strip_zero_lines(canonical(P));
    WitnessSurvey s;
    if (prep.rows.empty()) return s;
    s.rank = matrix_rank(prep.P);
    if (s.rank != 3) return s;
    auto f = rank_factorize(prep.P, 3);
    auto [Ai, Bi] = detail::integerize(f.A, f.B);
    return detail::survey(Ai, Bi, prep.rows, prep.cols, 0.0);
}

inline WitnessSurvey survey_witnesses(const RealMatrix& P, double sign_tol = kDefaultSignTol,
                                      double rank_tol = kDefaultRankTol) {
    auto prep = detail::strip_zero_lines(P);
    WitnessSurvey s;
    s.backend = Backend::floating;
    if (prep.rows.empty()) return s;
    s.rank = matrix_rank(prep.P, rank_tol);
    if (s.rank != 3) return s;
    auto f = rank_factorize(prep.P, 3, rank_tol);
    return detail::survey(f.A, f.B, prep.rows, prep.cols, sign_tol);
}

} // namespace mixrank::rank3
