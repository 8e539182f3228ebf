#pragma once

#include <array>
#include <cstddef>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/matrix.hpp"

// Grassmann-Cayley brackets in the projective plane. Rows of A are lines,
// columns of B are points; meet and join are both the cross product.
// Everything is generic in the scalar so the same code evaluates over
// rationals, integers, doubles or symbolic polynomials.

namespace mixrank::rank3 {

template <typename T> using Vec3 = std::array<T, 3>;

template <typename T> Vec3<T> cross(const Vec3<T>& x, const Vec3<T>& y) {
    return {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
}

template <typename T> T dot(const Vec3<T>& x, const Vec3<T>& y) {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
}

template <typename T> T det3(const Vec3<T>& x, const Vec3<T>& y, const Vec3<T>& z) {
    return dot(cross(x, y), z);
}

template <typename T> Vec3<T> row3(const Matrix<T>& A, std::size_t i) {
    return {A(i, 0), A(i, 1), A(i, 2)};
}

template <typename T> Vec3<T> col3(const Matrix<T>& B, std::size_t j) {
    return {B(0, j), B(1, j), B(2, j)};
}

namespace detail {

template <typename T> void require_rank3_shapes(const Matrix<T>& A, const Matrix<T>& B) {
    if (A.cols() != 3 || B.rows() != 3)
        throw DimensionError("brackets: expected A with 3 columns and B with 3 rows");
}

inline void require_row(std::size_t i, std::size_t m) {
    if (i >= m) throw IndexError("brackets: row index out of range");
}

inline void require_col(std::size_t j, std::size_t n) {
    if (j >= n) throw IndexError("brackets: column index out of range");
}

} // namespace detail

// det(a_i, a_j, a_k); zero iff the three lines are concurrent.
template <typename T> T bracket3(const Matrix<T>& A, std::size_t i, std::size_t j, std::size_t k) {
    if (A.cols() != 3) throw DimensionError("bracket3: A must have 3 columns");
    for (auto x : {i, j, k}) detail::require_row(x, A.rows());
    if (i == j || i == k || j == k) throw IndexError("bracket3: indices must be distinct");
    return det3(row3(A, i), row3(A, j), row3(A, k));
}

// (a_i ^ a_j) v b_ip v b_kp = det[a_i x a_j; b_ip; b_kp].
template <typename T>
T meet_join(const Matrix<T>& A, const Matrix<T>& B, std::size_t i, std::size_t j, std::size_t ip,
            std::size_t kp) {
    detail::require_rank3_shapes(A, B);
    detail::require_row(i, A.rows());
    detail::require_row(j, A.rows());
    detail::require_col(ip, B.cols());
    detail::require_col(kp, B.cols());
    return det3(cross(row3(A, i), row3(A, j)), col3(B, ip), col3(B, kp));
}

// The same quantity as a sum over 2x2 minors of (a_i; a_j) and (b_ip, b_kp).
template <typename T>
T meet_join_expanded(const Matrix<T>& A, const Matrix<T>& B, std::size_t i, std::size_t j,
                     std::size_t ip, std::size_t kp) {
    detail::require_rank3_shapes(A, B);
    T s = T(0);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = p + 1; q < 3; ++q) {
            T ma = A(i, p) * A(j, q) - A(i, q) * A(j, p);
            T mb = B(p, ip) * B(q, kp) - B(p, kp) * B(q, ip);
            s += ma * mb;
        }
    return s;
}

// (((a_i ^ a_j) v b_ip) ^ a_k) v (((a_i ^ a_j) v b_jp) ^ a_l) v b_kp, given
// the vertex v = a_i ^ a_j.
template <typename T>
T six_three_at(const Vec3<T>& v, const Vec3<T>& bip, const Vec3<T>& bjp, const Vec3<T>& ak,
               const Vec3<T>& al, const Vec3<T>& bkp) {
    const Vec3<T> p = cross(cross(v, bip), ak);
    const Vec3<T> q = cross(cross(v, bjp), al);
    return det3(p, q, bkp);
}

template <typename T>
T six_three(const Matrix<T>& A, const Matrix<T>& B, std::size_t i, std::size_t j, std::size_t k,
            std::size_t l, std::size_t ip, std::size_t jp, std::size_t kp) {
    detail::require_rank3_shapes(A, B);
    for (auto x : {i, j, k, l}) detail::require_row(x, A.rows());
    for (auto x : {ip, jp, kp}) detail::require_col(x, B.cols());
    return six_three_at(cross(row3(A, i), row3(A, j)), col3(B, ip), col3(B, jp), row3(A, k),
                        row3(A, l), col3(B, kp));
}

} // namespace mixrank::rank3
