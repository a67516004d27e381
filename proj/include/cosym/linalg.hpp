#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cosym::linalg {

/// Dense row-major matrix. Sized for charts of a few dozen coordinates;
/// everything here is O(D^3) at worst and stays exact-simple on purpose.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Matrix transposed() const;

    /// max column absolute sum
    double norm1() const;
    /// max row absolute sum
    double norm_inf() const;

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(double s);

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator*(const Matrix& lhs, const Matrix& rhs);

std::vector<double> mat_vec(const Matrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> v);
double norm2(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// LU factorization with partial pivoting.
class LuDecomposition {
public:
    explicit LuDecomposition(Matrix a);

    bool singular() const { return singular_; }
    std::size_t dim() const { return lu_.rows(); }

    /// Solves A x = rhs. Undefined when singular() is true.
    std::vector<double> solve(std::span<const double> rhs) const;

    Matrix inverse() const;
    double determinant() const;

private:
    Matrix lu_;
    std::vector<int> perm_;
    int sign_ = 1;
    bool singular_ = false;
};

/// 1-norm condition number via the explicit inverse; +inf when singular.
double condition_1(const Matrix& a, const LuDecomposition& lu);

} // namespace cosym::linalg
