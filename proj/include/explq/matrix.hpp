#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

namespace explq {

/// Small dense row-major matrix of doubles. Dimensions here are tiny
/// (2x2, 2xm, mxm with m = control dimension), so no external linear
/// algebra dependency is pulled in.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> vals)
        : rows_(rows), cols_(cols), a_(vals) {
        assert(a_.size() == rows * cols);
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Symmetric 2x2 from its three free entries.
    static Matrix sym2(double a11, double a12, double a22) {
        return Matrix(2, 2, {a11, a12, a12, a22});
    }

    /// 1xn row vector.
    static Matrix row(const std::vector<double>& v) {
        Matrix m(1, v.size());
        m.a_ = v;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return a_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return a_[i * cols_ + j];
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        assert(rows_ == o.rows_ && cols_ == o.cols_);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        assert(rows_ == o.rows_ && cols_ == o.cols_);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : a_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        assert(a.cols_ == b.rows_);
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    bool is_symmetric(double tol = 1e-12) const {
        if (rows_ != cols_) return false;
        const double scale = std::max(1.0, max_abs());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
        return true;
    }

    /// Replace by (M + M')/2. The recursions guarantee symmetry; this
    /// suppresses round-off drift so the invariant is exactly testable.
    void symmetrize() {
        assert(rows_ == cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j) {
                const double s = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = s;
                (*this)(j, i) = s;
            }
    }

    bool all_finite() const {
        for (double v : a_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// Relative pivot tolerance for the eliminations below. An absolute
/// threshold misfires here: deep horizons legitimately drive G_t down to
/// ~1e-16 while every entry keeps full relative accuracy.
inline constexpr double kPivotTol = 1e-12;

/// Inverse by Gaussian elimination with partial pivoting. Returns nullopt
/// when a pivot falls under tol relative to the matrix scale.
inline std::optional<Matrix> gauss_inverse(const Matrix& m, double rel_tol = kPivotTol) {
    assert(m.rows() == m.cols());
    const std::size_t n = m.rows();
    const double scale = std::max(m.max_abs(), 1e-300);
    Matrix a = m;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < rel_tol * scale) return std::nullopt;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        }
        const double d = a(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a(col, j) /= d;
            inv(col, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

/// Cholesky factor L (lower, M = LL') of a symmetric positive definite
/// matrix; nullopt when M is not SPD within the relative tolerance.
inline std::optional<Matrix> cholesky_lower(const Matrix& m, double rel_tol = kPivotTol) {
    assert(m.rows() == m.cols());
    const std::size_t n = m.rows();
    double scale = 1e-300;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m(i, i)));
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s < rel_tol * scale) return std::nullopt;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

/// ln|M| for SPD M given its Cholesky factor.
inline double log_det_from_cholesky(const Matrix& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

/// trace(A * B) without forming the product.
inline double trace_product(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.rows() && a.rows() == b.cols());
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, i);
    return s;
}

}  // namespace explq
