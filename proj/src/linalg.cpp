#include "cosym/linalg.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace cosym::linalg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

double Matrix::norm1() const {
    double best = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) s += std::abs((*this)(r, c));
        best = std::max(best, s);
    }
    return best;
}

double Matrix::norm_inf() const {
    double best = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) s += std::abs((*this)(r, c));
        best = std::max(best, s);
    }
    return best;
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
    assert(rows_ == rhs.rows_ && cols_ == rhs.cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += rhs.a_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    assert(rows_ == rhs.rows_ && cols_ == rhs.cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= rhs.a_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
    assert(lhs.cols() == rhs.rows());
    Matrix out(lhs.rows(), rhs.cols());
    for (std::size_t r = 0; r < lhs.rows(); ++r)
        for (std::size_t k = 0; k < lhs.cols(); ++k) {
            const double v = lhs(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < rhs.cols(); ++c) out(r, c) += v * rhs(k, c);
        }
    return out;
}

std::vector<double> mat_vec(const Matrix& m, std::span<const double> x) {
    assert(m.cols() == x.size());
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(std::span<const double> v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

LuDecomposition::LuDecomposition(Matrix a) : lu_(std::move(a)) {
    assert(lu_.rows() == lu_.cols());
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<int>(i);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t r = k + 1; r < n; ++r) {
            const double v = std::abs(lu_(r, k));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) {
            singular_ = true;
            continue;
        }
        if (pivot != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
            std::swap(perm_[k], perm_[pivot]);
            sign_ = -sign_;
        }
        const double inv = 1.0 / lu_(k, k);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = lu_(r, k) * inv;
            lu_(r, k) = f;
            if (f == 0.0) continue;
            for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
        }
    }
}

std::vector<double> LuDecomposition::solve(std::span<const double> rhs) const {
    const std::size_t n = dim();
    assert(rhs.size() == n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[static_cast<std::size_t>(perm_[i])];
    // forward substitution, unit lower triangle
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
        x[i] = s;
    }
    // back substitution
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
        x[ii] = s / lu_(ii, ii);
    }
    return x;
}

Matrix LuDecomposition::inverse() const {
    const std::size_t n = dim();
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        const std::vector<double> col = solve(e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
        e[c] = 0.0;
    }
    return inv;
}

double LuDecomposition::determinant() const {
    if (singular_) return 0.0;
    double d = static_cast<double>(sign_);
    for (std::size_t i = 0; i < dim(); ++i) d *= lu_(i, i);
    return d;
}

double condition_1(const Matrix& a, const LuDecomposition& lu) {
    if (lu.singular()) return std::numeric_limits<double>::infinity();
    return a.norm1() * lu.inverse().norm1();
}

} // namespace cosym::linalg
