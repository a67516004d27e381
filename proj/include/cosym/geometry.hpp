#pragma once

#include "cosym/chart.hpp"
#include "cosym/linalg.hpp"

#include <span>
#include <vector>

namespace cosym {

/// Numeric 1-form in the chart basis.
struct Covector {
    std::vector<double> components;

    Covector() = default;
    explicit Covector(std::size_t dim) : components(dim, 0.0) {}
    explicit Covector(std::vector<double> c) : components(std::move(c)) {}

    std::size_t dimension() const { return components.size(); }
    double& operator[](std::size_t i) { return components[i]; }
    double operator[](std::size_t i) const { return components[i]; }

    /// natural pairing <alpha, X>
    double pair(std::span<const double> x) const;
};

/// Constant antisymmetric coordinate matrix of the 2-form omega, built from
/// the Darboux blocks dq^i ^ dp_i, dW^k ^ dN_k and dGamma^A ^ d(S_A - Sigma_A).
/// Convention: omega(X, Y) = X^T W Y, so (i_X omega)_j = sum_i X^i W_ij.
struct TwoFormMatrix {
    linalg::Matrix w;

    std::size_t dimension() const { return w.rows(); }

    /// i_X omega as a covector
    Covector contract(std::span<const double> x) const;

    /// omega(X, Y)
    double apply(std::span<const double> x, std::span<const double> y) const;
};

TwoFormMatrix build_two_form(const ChartSpec& chart);

/// Condition estimate beyond which the structure volume form
/// omega^n ^ eta_1 ^ ... ^ eta_p is treated as vanished.
inline constexpr double kDegenerateConditionLimit = 1e12;

/// The musical isomorphism at one state, materialized as the dense matrix
///   B = M(W) + sum_k eta_k eta_k^T,   M(W) X = i_X omega.
/// Immutable; the LU factorization and condition estimate are computed on
/// construction.
class FlatOperator {
public:
    FlatOperator(const TwoFormMatrix& omega, std::vector<Covector> etas);

    std::size_t dimension() const { return b_.rows(); }
    const linalg::Matrix& matrix() const { return b_; }
    const std::vector<Covector>& etas() const { return etas_; }

    double condition_estimate() const { return condition_; }
    double determinant() const { return lu_.determinant(); }
    bool degenerate() const;

    /// B X, i.e. i_X omega + sum_k eta_k(X) eta_k
    Covector apply(std::span<const double> x) const;

    /// unique X with B X = rhs; throws DegenerateStructure when the
    /// condition estimate exceeds kDegenerateConditionLimit
    std::vector<double> solve(const Covector& rhs) const;

private:
    linalg::Matrix b_;
    std::vector<Covector> etas_;
    linalg::LuDecomposition lu_;
    double condition_ = 0.0;
};

inline Covector flat_apply(const FlatOperator& op, std::span<const double> x) {
    return op.apply(x);
}

inline std::vector<double> flat_solve(const FlatOperator& op, const Covector& rhs) {
    return op.solve(rhs);
}

/// The family of Reeb fields R_k = flat_solve(eta_k); they satisfy
/// i_{R_k} omega = 0 and eta_j(R_k) = delta_jk.
std::vector<std::vector<double>> reeb_family(const FlatOperator& op,
                                             std::span<const Covector> etas);

} // namespace cosym
