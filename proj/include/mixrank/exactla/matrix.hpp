#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixrank/errors.hpp"
#include "mixrank/exactla/scalar.hpp"

namespace mixrank {

/**
 * Dense row-major matrix over a scalar type T.
 *
 * T is typically Rational (exact backend) or double (float backend); integer
 * types are used for count tables. The backend is carried by the type, so a
 * Matrix is homogeneous by construction.
 */
template <typename T> class Matrix {
  public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw DimensionError("Matrix: data length does not match shape");
    }

    Matrix(std::initializer_list<std::initializer_list<T>> rows)
        : Matrix(from_nested<T>(rows)) {}

    template <typename U>
        requires(!std::is_same_v<U, T>)
    Matrix(std::initializer_list<std::initializer_list<U>> rows)
        : Matrix(from_nested<U>(rows)) {}

  private:
    template <typename U>
    static Matrix from_nested(std::initializer_list<std::initializer_list<U>> rows) {
        const std::size_t m = rows.size(), n = m ? rows.begin()->size() : 0;
        std::vector<T> data;
        data.reserve(m * n);
        for (const auto& r : rows) {
            if (r.size() != n) throw DimensionError("Matrix: ragged initializer");
            for (const auto& v : r) data.push_back(T(v));
        }
        return Matrix(m, n, std::move(data));
    }

  public:
    static Matrix identity(std::size_t n) {
        Matrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = T(1);
        return I;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const {
        return data_[i * cols_ + j];
    }

    T& at(std::size_t i, std::size_t j) {
        check_index(i, j);
        return (*this)(i, j);
    }
    const T& at(std::size_t i, std::size_t j) const {
        check_index(i, j);
        return (*this)(i, j);
    }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<T> column(std::size_t j) const {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    const std::vector<T>& data() const noexcept { return data_; }
    std::vector<T>& data() noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    void swap_rows(std::size_t a, std::size_t b) {
        if (a == b) return;
        for (std::size_t j = 0; j < cols_; ++j)
            std::swap((*this)(a, j), (*this)(b, j));
    }

    T sum() const {
        T s(0);
        for (const auto& v : data_) s += v;
        return s;
    }

    template <typename U> Matrix<U> cast() const {
        std::vector<U> out;
        out.reserve(data_.size());
        for (const auto& v : data_) out.push_back(convert<U>(v));
        return Matrix<U>(rows_, cols_, std::move(out));
    }

    Matrix select_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < cols_; ++j) out(r, j) = (*this)(idx[r], j);
        return out;
    }

    Matrix select_cols(const std::vector<std::size_t>& idx) const {
        Matrix out(rows_, idx.size());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t c = 0; c < idx.size(); ++c) out(i, c) = (*this)(i, idx[c]);
        return out;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(const T& s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    Matrix& operator/=(const T& s) {
        for (auto& v : data_) v /= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
    friend Matrix operator*(const T& s, Matrix a) { return a *= s; }
    friend Matrix operator/(Matrix a, const T& s) { return a /= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_)
            throw DimensionError("Matrix product: inner dimensions differ");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (ScalarTraits<T>::is_zero(aik)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

  private:
    template <typename U, typename V> static U convert(const V& v) {
        if constexpr (std::is_same_v<U, double> && std::is_same_v<V, Rational>)
            return v.get_d();
        else
            return U(v);
    }

    void check_index(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) throw IndexError("Matrix: index out of range");
    }

    void require_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionError("Matrix: shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RationalMatrix = Matrix<Rational>;
using RealMatrix = Matrix<double>;

template <typename T> bool all_nonnegative(const Matrix<T>& M) {
    return std::all_of(M.data().begin(), M.data().end(),
                       [](const T& v) { return ScalarTraits<T>::sign(v) >= 0; });
}

template <typename T> bool has_zero_entry(const Matrix<T>& M) {
    return std::any_of(M.data().begin(), M.data().end(),
                       [](const T& v) { return ScalarTraits<T>::is_zero(v); });
}

template <typename T> T max_abs(const Matrix<T>& M) {
    T best(0);
    for (const auto& v : M.data()) {
        T a = ScalarTraits<T>::abs(v);
        if (a > best) best = a;
    }
    return best;
}

// Lowest-terms copy; gmp comparisons assume canonical fractions.
inline RationalMatrix canonical(RationalMatrix M) {
    for (auto& v : M.data()) v.canonicalize();
    return M;
}

inline RealMatrix to_real(const RationalMatrix& M) { return M.template cast<double>(); }

inline RationalMatrix promote(const RealMatrix& M) {
    std::vector<Rational> out;
    out.reserve(M.size());
    for (double v : M.data()) out.push_back(promote(v));
    return RationalMatrix(M.rows(), M.cols(), std::move(out));
}

} // namespace mixrank
