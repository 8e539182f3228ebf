#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/matrix.hpp"

namespace mixrank {

// Float rank / pivot threshold, relative to the largest absolute entry.
inline constexpr double kDefaultRankTol = 1e-9;

template <typename T> struct Rref {
    Matrix<T> reduced;               // same shape as input, rows past rank are zero
    std::vector<std::size_t> pivots; // pivot column of each nonzero row
    std::size_t rank() const noexcept { return pivots.size(); }
};

namespace detail {

// Scales every row of a rational matrix to integers.
inline Matrix<Integer> integer_rows(const RationalMatrix& M, std::vector<Integer>* scales) {
    Matrix<Integer> Z(M.rows(), M.cols());
    if (scales) scales->assign(M.rows(), Integer(1));
    for (std::size_t i = 0; i < M.rows(); ++i) {
        Integer l = 1;
        for (std::size_t j = 0; j < M.cols(); ++j) {
            const Integer& d = M(i, j).get_den();
            mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
        }
        for (std::size_t j = 0; j < M.cols(); ++j) {
            Rational s = M(i, j) * Rational(l);
            Z(i, j) = s.get_num();
        }
        if (scales) (*scales)[i] = l;
    }
    return Z;
}

// Fraction-free (Bareiss) elimination on an integer matrix, in place.
// Returns the rank; `swaps` counts row exchanges. On a square full-rank
// input the last pivot is the determinant up to the swap sign.
inline std::size_t bareiss(Matrix<Integer>& Z, std::size_t* swaps = nullptr) {
    const std::size_t m = Z.rows(), n = Z.cols();
    Integer prev = 1;
    std::size_t r = 0, nswaps = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        std::size_t p = r;
        while (p < m && Z(p, c) == 0) ++p;
        if (p == m) continue;
        if (p != r) {
            Z.swap_rows(p, r);
            ++nswaps;
        }
        for (std::size_t i = r + 1; i < m; ++i) {
            for (std::size_t j = c + 1; j < n; ++j) {
                Integer v = Z(i, j) * Z(r, c) - Z(i, c) * Z(r, j);
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
                Z(i, j) = v;
            }
            Z(i, c) = 0;
        }
        prev = Z(r, c);
        ++r;
    }
    if (swaps) *swaps = nswaps;
    return r;
}

inline void require_nonempty(std::size_t rows, std::size_t cols, const char* what) {
    if (rows == 0 || cols == 0) throw DimensionError(std::string(what) + ": empty matrix");
}

} // namespace detail

/**
 * Reduced row echelon form.
 *
 * Columns are scanned left to right. The exact backend takes the first
 * nonzero entry as pivot; the float backend takes the largest absolute value
 * and treats entries below tol * max|M| as zero.
 */
template <typename T> Rref<T> rref(const Matrix<T>& M, double tol = kDefaultRankTol) {
    detail::require_nonempty(M.rows(), M.cols(), "rref");
    Rref<T> out{M, {}};
    Matrix<T>& R = out.reduced;
    const std::size_t m = R.rows(), n = R.cols();
    double threshold = 0.0;
    if constexpr (!ScalarTraits<T>::exact) threshold = tol * max_abs(M);

    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        std::size_t p = m;
        if constexpr (ScalarTraits<T>::exact) {
            for (std::size_t i = r; i < m; ++i)
                if (sgn(R(i, c)) != 0) {
                    p = i;
                    break;
                }
        } else {
            double best = threshold;
            for (std::size_t i = r; i < m; ++i)
                if (std::fabs(R(i, c)) > best) {
                    best = std::fabs(R(i, c));
                    p = i;
                }
        }
        if (p == m) {
            if constexpr (!ScalarTraits<T>::exact)
                for (std::size_t i = r; i < m; ++i) R(i, c) = 0.0;
            continue;
        }
        R.swap_rows(p, r);
        const T pivot = R(r, c);
        for (std::size_t j = c; j < n; ++j) R(r, j) /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            const T f = R(i, c);
            if (ScalarTraits<T>::is_zero(f)) continue;
            for (std::size_t j = c; j < n; ++j) R(i, j) -= f * R(r, j);
        }
        out.pivots.push_back(c);
        ++r;
    }
    // Float elimination leaves residue below threshold in the trailing rows.
    for (std::size_t i = r; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) R(i, j) = T(0);
    return out;
}

/**
 * Rank of M. Exact backend: fraction-free elimination over the integers.
 * Float backend: full-pivot elimination; pivots below tol * max|M| count as zero.
 */
inline std::size_t matrix_rank(const RationalMatrix& M) {
    detail::require_nonempty(M.rows(), M.cols(), "matrix_rank");
    auto Z = detail::integer_rows(M, nullptr);
    return detail::bareiss(Z);
}

inline std::size_t matrix_rank(const RealMatrix& M, double tol = kDefaultRankTol) {
    detail::require_nonempty(M.rows(), M.cols(), "matrix_rank");
    RealMatrix W = M;
    const std::size_t m = W.rows(), n = W.cols();
    const double threshold = tol * max_abs(M);
    std::vector<std::size_t> colperm(n);
    for (std::size_t j = 0; j < n; ++j) colperm[j] = j;
    std::size_t r = 0;
    for (; r < std::min(m, n); ++r) {
        std::size_t bi = r, bj = r;
        double best = -1.0;
        for (std::size_t i = r; i < m; ++i)
            for (std::size_t j = r; j < n; ++j)
                if (std::fabs(W(i, colperm[j])) > best) {
                    best = std::fabs(W(i, colperm[j]));
                    bi = i;
                    bj = j;
                }
        if (best <= threshold) break;
        W.swap_rows(r, bi);
        std::swap(colperm[r], colperm[bj]);
        const double piv = W(r, colperm[r]);
        for (std::size_t i = r + 1; i < m; ++i) {
            const double f = W(i, colperm[r]) / piv;
            if (f == 0.0) continue;
            for (std::size_t j = r; j < n; ++j) W(i, colperm[j]) -= f * W(r, colperm[j]);
        }
    }
    return r;
}

template <typename T> struct RankFactorization {
    Matrix<T> A; // m x r
    Matrix<T> B; // r x n
    std::size_t rank = 0;
};

/**
 * P = A * B with inner dimension r. A holds the pivot columns of P and B the
 * nonzero rows of rref(P); both are padded with zeros when rank(P) < r.
 */
template <typename T>
RankFactorization<T> rank_factorize(const Matrix<T>& P, std::size_t r,
                                    double tol = kDefaultRankTol) {
    auto red = rref(P, tol);
    const std::size_t k = red.rank();
    if (k > r)
        throw RankExcessError("rank_factorize: rank " + std::to_string(k) +
                              " exceeds requested " + std::to_string(r));
    RankFactorization<T> f{Matrix<T>(P.rows(), r), Matrix<T>(r, P.cols()), k};
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < P.rows(); ++i) f.A(i, c) = P(i, red.pivots[c]);
        for (std::size_t j = 0; j < P.cols(); ++j) f.B(c, j) = red.reduced(c, j);
    }
    return f;
}

inline Rational determinant(const RationalMatrix& M) {
    if (!M.is_square()) throw DimensionError("determinant: matrix is not square");
    detail::require_nonempty(M.rows(), M.cols(), "determinant");
    std::vector<Integer> scales;
    auto Z = detail::integer_rows(M, &scales);
    std::size_t swaps = 0;
    const std::size_t n = M.rows();
    if (detail::bareiss(Z, &swaps) < n) return Rational(0);
    Rational d(Z(n - 1, n - 1));
    if (swaps % 2) d = -d;
    Integer s = 1;
    for (const auto& v : scales) s *= v;
    d /= Rational(s);
    d.canonicalize();
    return d;
}

inline double determinant(const RealMatrix& M) {
    if (!M.is_square()) throw DimensionError("determinant: matrix is not square");
    detail::require_nonempty(M.rows(), M.cols(), "determinant");
    RealMatrix W = M;
    const std::size_t n = W.rows();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t i = c + 1; i < n; ++i)
            if (std::fabs(W(i, c)) > std::fabs(W(p, c))) p = i;
        if (W(p, c) == 0.0) return 0.0;
        if (p != c) {
            W.swap_rows(p, c);
            det = -det;
        }
        det *= W(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            const double f = W(i, c) / W(c, c);
            for (std::size_t j = c; j < n; ++j) W(i, j) -= f * W(c, j);
        }
    }
    return det;
}

// Solves M X = Y for square nonsingular M.
template <typename T> Matrix<T> solve(const Matrix<T>& M, const Matrix<T>& Y) {
    if (!M.is_square() || M.rows() != Y.rows())
        throw DimensionError("solve: incompatible shapes");
    const std::size_t n = M.rows();
    Matrix<T> aug(n, n + Y.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = M(i, j);
        for (std::size_t j = 0; j < Y.cols(); ++j) aug(i, n + j) = Y(i, j);
    }
    auto red = rref(aug, 0.0);
    if (red.rank() < n || red.pivots[n - 1] != n - 1)
        throw NumericError("solve: singular system");
    Matrix<T> X(n, Y.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < Y.cols(); ++j) X(i, j) = red.reduced(i, n + j);
    return X;
}

template <typename T> Matrix<T> inverse(const Matrix<T>& M) {
    return solve(M, Matrix<T>::identity(M.rows()));
}

} // namespace mixrank
