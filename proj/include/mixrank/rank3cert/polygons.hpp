#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/rank3cert/membership.hpp"

namespace mixrank::rank3 {

using Point2 = std::array<Rational, 2>;

/**
 * Span polygon (outer) and column polygon (inner) of a rank-3 nonnegative
 * matrix, both inside the probability simplex of R^m.
 *
 * outer: vertices in cyclic order. inner: every normalized column, in
 * column order. The *_chart fields give the same points in 2D affine
 * coordinates of the plane they span.
 */
struct NestedPolygons {
    std::vector<std::vector<Rational>> outer;
    std::vector<std::vector<Rational>> inner;
    std::vector<Point2> outer_chart;
    std::vector<Point2> inner_chart;
};

namespace detail {

inline int half_plane(const Rational& x, const Rational& y) {
    return (sgn(y) > 0 || (sgn(y) == 0 && sgn(x) > 0)) ? 0 : 1;
}

// Counter-clockwise order around `c`, exact.
inline void sort_ccw(std::vector<std::size_t>& idx, const std::vector<Point2>& pts, const Point2& c) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const Rational ax = pts[a][0] - c[0], ay = pts[a][1] - c[1];
        const Rational bx = pts[b][0] - c[0], by = pts[b][1] - c[1];
        const int ha = half_plane(ax, ay), hb = half_plane(bx, by);
        if (ha != hb) return ha < hb;
        return sgn(Rational(ax * by - ay * bx)) > 0;
    });
}

} // namespace detail

inline NestedPolygons nested_polygons(const RationalMatrix& input) {
    const RationalMatrix P = canonical(input);
    if (!all_nonnegative(P)) throw DomainError("nested_polygons: matrix has a negative entry");
    for (std::size_t j = 0; j < P.cols(); ++j) {
        bool nz = false;
        for (std::size_t i = 0; i < P.rows(); ++i) nz = nz || sgn(P(i, j)) != 0;
        if (!nz) throw DomainError("nested_polygons: zero column");
    }
    if (matrix_rank(P) != 3) throw DomainError("nested_polygons: geometry needs rank exactly 3");

    const std::size_t m = P.rows(), n = P.cols();
    auto rf = rank_factorize(P, 3);
    Vec3<Rational> w{0, 0, 0};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < 3; ++c) w[c] += rf.A(i, c);
    std::size_t drop = 0;
    while (sgn(w[drop]) == 0) ++drop;

    auto embed = [&](const Vec3<Rational>& x) {
        std::vector<Rational> y(m);
        for (std::size_t i = 0; i < m; ++i) y[i] = dot(row3(rf.A, i), x);
        return y;
    };
    auto chart = [&](const Vec3<Rational>& x) {
        Point2 p;
        std::size_t k = 0;
        for (std::size_t c = 0; c < 3; ++c)
            if (c != drop) p[k++] = x[c];
        return p;
    };

    NestedPolygons out;
    std::vector<Vec3<Rational>> verts;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            Vec3<Rational> v = cross(row3(rf.A, i), row3(rf.A, j));
            if (sgn(v[0]) == 0 && sgn(v[1]) == 0 && sgn(v[2]) == 0) continue;
            Rational wv = dot(w, v);
            if (sgn(wv) == 0) continue;
            for (auto& c : v) c /= wv;
            bool inside = true;
            for (std::size_t k = 0; k < m && inside; ++k) inside = sgn(dot(row3(rf.A, k), v)) >= 0;
            if (!inside) continue;
            if (std::find(verts.begin(), verts.end(), v) == verts.end()) verts.push_back(v);
        }

    std::vector<Point2> pts;
    for (const auto& v : verts) pts.push_back(chart(v));
    Point2 c{0, 0};
    for (const auto& p : pts) {
        c[0] += p[0];
        c[1] += p[1];
    }
    if (!pts.empty()) {
        c[0] /= Rational(static_cast<long>(pts.size()));
        c[1] /= Rational(static_cast<long>(pts.size()));
    }
    std::vector<std::size_t> order(verts.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    detail::sort_ccw(order, pts, c);
    for (auto k : order) {
        out.outer.push_back(embed(verts[k]));
        out.outer_chart.push_back(pts[k]);
    }

    for (std::size_t j = 0; j < n; ++j) {
        Vec3<Rational> b = col3(rf.B, j);
        const Rational s = dot(w, b);
        for (auto& x : b) x /= s;
        out.inner.push_back(embed(b));
        out.inner_chart.push_back(chart(b));
    }
    return out;
}

// Whether x (a point of the chart) satisfies every edge inequality of the
// ccw polygon `poly`.
inline bool chart_contains(const std::vector<Point2>& poly, const Point2& x) {
    const std::size_t k = poly.size();
    for (std::size_t e = 0; e < k; ++e) {
        const Point2& a = poly[e];
        const Point2& b = poly[(e + 1) % k];
        const Rational cr = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
        if (sgn(cr) < 0) return false;
    }
    return true;
}

} // namespace mixrank::rank3
