#pragma once

// Small dense matrix/vector kernels. Dimensions in this library are tiny
// (n <= a few hundred), so everything is stored dense and solved with
// partial-pivot LU.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ddg {

/// Raised when a Newton linear solve encounters a numerically singular matrix.
struct SingularJacobian : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T init = T(0.0))
        : rows_(rows), cols_(cols), a_(rows * cols, init) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1.0);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Matrix& operator+=(const Matrix& o) {
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> a_;
};

template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) { return a += b; }

template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) { return a -= b; }

template <class T, class S>
Matrix<T> operator*(const S& s, Matrix<T> m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = s * m(i, j);
    return m;
}

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T& aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

template <class T>
std::vector<T> operator*(const Matrix<T>& a, std::span<const T> v) {
    if (a.cols() != v.size()) throw std::invalid_argument("matrix-vector product: shape mismatch");
    std::vector<T> r(a.rows(), T(0.0));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r[i] += a(i, j) * v[j];
    return r;
}

template <class T>
std::vector<T> operator*(const Matrix<T>& a, const std::vector<T>& v) {
    return a * std::span<const T>(v);
}

template <class T>
Matrix<T> transpose(const Matrix<T>& m) {
    Matrix<T> t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

/// Skew projection: 0.5*(m - m^T). Exactly skew-symmetric entrywise.
template <class T>
Matrix<T> skew_part(const Matrix<T>& m) {
    Matrix<T> s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) - m(j, i));
    return s;
}

inline double max_abs(const Matrix<double>& m) {
    double mx = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) mx = std::max(mx, std::abs(m(i, j)));
    return mx;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm2(const std::vector<double>& v) { return norm2(std::span<const double>(v)); }

/// Dense LU solve with partial pivoting. A pivot below 1e-14 * max|A| is
/// treated as singular.
inline std::vector<double> lu_solve(Matrix<double> a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw std::invalid_argument("lu_solve: shape mismatch");
    const double tiny = 1e-14 * std::max(max_abs(a), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (std::abs(a(p, k)) < tiny) throw SingularJacobian("pivot below threshold in LU solve");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(b[k], b[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = a(i, k) / a(k, k);
            a(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
            b[i] -= l * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

}  // namespace ddg
