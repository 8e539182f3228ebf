#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/rank3cert/membership.hpp"

namespace mixrank::rank3 {

struct NonnegFactorization {
    RationalMatrix A; // m x 3, >= 0
    RationalMatrix B; // 3 x n, >= 0
    std::optional<Witness> witness; // triangle apex used, when rank is 3
};

namespace detail {

// Rational lines and points of one orientation, in local indices.
struct RationalFrame {
    RationalMatrix A; // lines as rows
    RationalMatrix B; // points as columns
    Vec3<Rational> w; // sum of the lines; w.x is the mass of A x
};

inline RationalFrame rational_frame(const RationalMatrix& A, const RationalMatrix& B, bool swapped) {
    RationalFrame f{swapped ? B.transpose() : A, swapped ? A.transpose() : B, {0, 0, 0}};
    for (std::size_t i = 0; i < f.A.rows(); ++i)
        for (std::size_t c = 0; c < 3; ++c) f.w[c] += f.A(i, c);
    return f;
}

inline Vec3<Rational> scaled(const Vec3<Rational>& x, const Rational& s) {
    return {x[0] * s, x[1] * s, x[2] * s};
}

// x / (w.x); requires w.x != 0.
inline Vec3<Rational> normalized(const RationalFrame& f, const Vec3<Rational>& x) {
    const Rational m = dot(f.w, x);
    return scaled(x, 1 / m);
}

// Point where the ray from vhat through bhat leaves the polygon.
inline std::optional<Vec3<Rational>> exit_point(const RationalFrame& f, const Vec3<Rational>& vhat,
                                                const Vec3<Rational>& bhat) {
    const Vec3<Rational> dir{bhat[0] - vhat[0], bhat[1] - vhat[1], bhat[2] - vhat[2]};
    std::optional<Rational> best;
    for (std::size_t k = 0; k < f.A.rows(); ++k) {
        const auto a = row3(f.A, k);
        const Rational d = dot(a, dir);
        if (sgn(d) >= 0) continue;
        const Rational s = -dot(a, bhat) / d;
        if (!best || s < *best) best = s;
    }
    if (!best || sgn(*best) < 0) return std::nullopt;
    return Vec3<Rational>{bhat[0] + *best * dir[0], bhat[1] + *best * dir[1],
                          bhat[2] + *best * dir[2]};
}

// Triangle with apex vertex v through points b1, b2; nullopt unless it
// yields a nonnegative factorization of the frame product.
inline std::optional<std::pair<RationalMatrix, RationalMatrix>>
triangle_factorization(const RationalFrame& f, Vec3<Rational> v, const Vec3<Rational>& b1,
                       const Vec3<Rational>& b2) {
    const Rational wv = dot(f.w, v);
    if (sgn(wv) == 0) return std::nullopt;
    const Vec3<Rational> vhat = scaled(v, 1 / wv);
    const Rational m1 = dot(f.w, b1), m2 = dot(f.w, b2);
    if (sgn(m1) <= 0 || sgn(m2) <= 0) return std::nullopt;
    auto e1 = exit_point(f, vhat, scaled(b1, 1 / m1));
    auto e2 = exit_point(f, vhat, scaled(b2, 1 / m2));
    if (!e1 || !e2) return std::nullopt;
    RationalMatrix T(3, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        T(r, 0) = vhat[r];
        T(r, 1) = (*e1)[r];
        T(r, 2) = (*e2)[r];
    }
    if (sgn(determinant(T)) == 0) return std::nullopt;
    RationalMatrix A2 = f.A * T;
    if (!all_nonnegative(A2)) return std::nullopt;
    RationalMatrix B2 = solve(T, f.B);
    if (!all_nonnegative(B2)) return std::nullopt;
    return std::make_pair(std::move(A2), std::move(B2));
}

// The two points of the frame that support the point set from vertex v.
inline std::optional<std::pair<std::size_t, std::size_t>> supporting_points(const RationalFrame& f,
                                                                             const Vec3<Rational>& v) {
    const std::size_t n = f.B.cols();
    std::optional<std::size_t> left, right;
    for (std::size_t a = 0; a < n && !(left && right); ++a) {
        const auto L = cross(v, col3(f.B, a));
        if (sgn(L[0]) == 0 && sgn(L[1]) == 0 && sgn(L[2]) == 0) continue;
        bool ge = true, le = true;
        for (std::size_t k = 0; k < n; ++k) {
            const int s = sgn(dot(L, col3(f.B, k)));
            ge = ge && s >= 0;
            le = le && s <= 0;
        }
        if (ge && !left) left = a;
        if (le && !right) right = a;
    }
    if (!left || !right) return std::nullopt;
    return std::make_pair(*left, *right);
}

inline bool is_polygon_vertex(const RationalFrame& f, const Vec3<Rational>& v) {
    SignFamily fam;
    for (std::size_t k = 0; k < f.A.rows(); ++k)
        if (!fam.add(sgn(dot(v, row3(f.A, k))))) return false;
    return true;
}

inline RationalMatrix embed_rows(const RationalMatrix& X, const std::vector<std::size_t>& ids,
                                 std::size_t total) {
    RationalMatrix out(total, X.cols());
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) out(ids[r], c) = X(r, c);
    return out;
}

inline NonnegFactorization low_rank_factorization(const RationalMatrix& P, std::size_t rank) {
    const std::size_t m = P.rows(), n = P.cols();
    NonnegFactorization out{RationalMatrix(m, 3), RationalMatrix(3, n), std::nullopt};
    if (rank == 0) return out;
    if (rank == 1) {
        std::size_t i0 = 0, j0 = 0;
        for (std::size_t k = 0; k < P.size(); ++k)
            if (sgn(P.data()[k]) != 0) {
                i0 = k / n;
                j0 = k % n;
                break;
            }
        for (std::size_t i = 0; i < m; ++i) out.A(i, 0) = P(i, j0);
        for (std::size_t j = 0; j < n; ++j) out.B(0, j) = P(i0, j) / P(i0, j0);
        return out;
    }
    // rank 2: the two extreme columns span a cone containing all others
    auto rf = rank_factorize(P, 2);
    auto det2 = [&](std::size_t x, std::size_t y) -> Rational {
        return rf.B(0, x) * rf.B(1, y) - rf.B(1, x) * rf.B(0, y);
    };
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < n; ++j)
        if (sgn(rf.B(0, j)) != 0 || sgn(rf.B(1, j)) != 0) nz.push_back(j);
    std::optional<std::size_t> j1, j2;
    for (auto a : nz) {
        bool first = true, last = true;
        for (auto k : nz) {
            const int s = sgn(det2(a, k));
            first = first && s >= 0;
            last = last && s <= 0;
        }
        if (first && !j1) j1 = a;
        if (last && !j2) j2 = a;
    }
    if (!j1 || !j2 || sgn(det2(*j1, *j2)) == 0)
        throw NumericError("nonneg_rank3_factorize: no extreme columns for rank 2");
    RationalMatrix M(2, 2);
    M(0, 0) = rf.B(0, *j1);
    M(1, 0) = rf.B(1, *j1);
    M(0, 1) = rf.B(0, *j2);
    M(1, 1) = rf.B(1, *j2);
    RationalMatrix C = solve(M, rf.B);
    for (std::size_t i = 0; i < m; ++i) {
        out.A(i, 0) = P(i, *j1);
        out.A(i, 1) = P(i, *j2);
    }
    for (std::size_t j = 0; j < n; ++j) {
        out.B(0, j) = C(0, j);
        out.B(1, j) = C(1, j);
    }
    if (!all_nonnegative(out.B))
        throw NumericError("nonneg_rank3_factorize: rank-2 coefficients negative");
    return out;
}

} // namespace detail

/**
 * Exact nonnegative factorization P = A B with inner dimension 3.
 *
 * The factor A collects the vertices of a triangle sandwiched between the
 * column polygon and the span polygon, B the barycentric coordinates of the
 * columns. Throws RefusalError if P has nonnegative rank above 3.
 */
inline NonnegFactorization nonneg_rank3_factorize(const RationalMatrix& input) {
    const RationalMatrix P = canonical(input);
    auto prep = detail::strip_zero_lines(P);
    const std::size_t m = P.rows(), n = P.cols();
    if (prep.rows.empty()) return {RationalMatrix(m, 3), RationalMatrix(3, n), std::nullopt};

    auto finish = [&](RationalMatrix A, RationalMatrix B, std::optional<Witness> w) {
        NonnegFactorization out{detail::embed_rows(A, prep.rows, m),
                                detail::embed_rows(B.transpose(), prep.cols, n).transpose(), w};
        if (out.A * out.B != P) throw NumericError("nonneg_rank3_factorize: product mismatch");
        return out;
    };

    const std::size_t rank = matrix_rank(prep.P);
    if (rank > 3) throw RefusalError("nonneg_rank3_factorize: rank exceeds 3");
    if (rank < 3) {
        auto low = detail::low_rank_factorization(prep.P, rank);
        return finish(low.A, low.B, std::nullopt);
    }

    auto rf = rank_factorize(prep.P, 3);
    auto [Ai, Bi] = detail::integerize(rf.A, rf.B);
    const auto local_rows = detail::iota_ids(prep.rows.size());
    const auto local_cols = detail::iota_ids(prep.cols.size());
    auto s = detail::survey(Ai, Bi, local_rows, local_cols, 0.0);
    if (s.passing.empty()) throw RefusalError("nonneg_rank3_factorize: nonnegative rank exceeds 3");

    auto orient = [&](bool swapped, std::pair<RationalMatrix, RationalMatrix> ab) {
        if (!swapped) return ab;
        return std::make_pair(ab.second.transpose(), ab.first.transpose());
    };
    auto global = [&](const Witness& w) {
        const auto& aid = w.swapped ? prep.cols : prep.rows;
        const auto& bid = w.swapped ? prep.rows : prep.cols;
        return Witness{aid[w.i], aid[w.j], bid[w.iprime], bid[w.jprime], w.swapped};
    };

    for (const auto& c : s.passing) {
        const auto& w = c.witness;
        auto f = detail::rational_frame(rf.A, rf.B, w.swapped);
        auto v = cross(row3(f.A, w.i), row3(f.A, w.j));
        auto tri = detail::triangle_factorization(f, v, col3(f.B, w.iprime), col3(f.B, w.jprime));
        if (tri) {
            auto ab = orient(w.swapped, std::move(*tri));
            return finish(ab.first, ab.second, global(w));
        }
    }
    // Every vertex of the span polygon with its own supporting points.
    for (bool swapped : {false, true}) {
        auto f = detail::rational_frame(rf.A, rf.B, swapped);
        for (std::size_t i = 0; i < f.A.rows(); ++i)
            for (std::size_t j = i + 1; j < f.A.rows(); ++j) {
                auto v = cross(row3(f.A, i), row3(f.A, j));
                if (sgn(v[0]) == 0 && sgn(v[1]) == 0 && sgn(v[2]) == 0) continue;
                if (!detail::is_polygon_vertex(f, v)) continue;
                if (sgn(dot(f.w, v)) < 0) v = detail::scaled(v, Rational(-1));
                auto sp = detail::supporting_points(f, v);
                if (!sp) continue;
                auto tri = detail::triangle_factorization(f, v, col3(f.B, sp->first),
                                                          col3(f.B, sp->second));
                if (tri) {
                    auto ab = orient(swapped, std::move(*tri));
                    return finish(ab.first, ab.second,
                                  global(Witness{i, j, sp->first, sp->second, swapped}));
                }
            }
    }
    throw NumericError("nonneg_rank3_factorize: no sandwiched triangle found");
}

} // namespace mixrank::rank3
