#include "cosym/geometry.hpp"

#include "cosym/errors.hpp"

#include <cassert>
#include <cmath>

namespace cosym {

double Covector::pair(std::span<const double> x) const {
    return linalg::dot(components, x);
}

Covector TwoFormMatrix::contract(std::span<const double> x) const {
    assert(x.size() == dimension());
    const std::size_t d = dimension();
    Covector out(d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += x[i] * w(i, j);
        out[j] = s;
    }
    return out;
}

double TwoFormMatrix::apply(std::span<const double> x, std::span<const double> y) const {
    return contract(x).pair(y);
}

TwoFormMatrix build_two_form(const ChartSpec& chart) {
    const std::size_t d = chart.dimension();
    TwoFormMatrix omega{linalg::Matrix(d, d)};
    auto set_pair = [&omega](std::size_t r, std::size_t c, double v) {
        omega.w(r, c) = v;
        omega.w(c, r) = -v;
    };
    for (std::size_t i = 0; i < chart.pairs; ++i)
        set_pair(chart.q_index(i), chart.p_index(i), 1.0);
    for (std::size_t k = 0; k < chart.compartments; ++k)
        set_pair(chart.w_index(k), chart.n_index(k), 1.0);
    if (chart.has_gamma_block()) {
        for (std::size_t a = 0; a < chart.subsystems; ++a) {
            set_pair(chart.gamma_index(a), chart.s_index(a), 1.0);
            set_pair(chart.gamma_index(a), chart.sigma_index(a), -1.0);
        }
    }
    return omega;
}

namespace {

linalg::Matrix flat_matrix(const TwoFormMatrix& omega, const std::vector<Covector>& etas) {
    const std::size_t d = omega.dimension();
    linalg::Matrix b = omega.w.transposed(); // M(W): X -> i_X omega
    for (const Covector& eta : etas) {
        assert(eta.dimension() == d);
        for (std::size_t r = 0; r < d; ++r) {
            const double er = eta[r];
            if (er == 0.0) continue;
            for (std::size_t c = 0; c < d; ++c) b(r, c) += er * eta[c];
        }
    }
    return b;
}

} // namespace

FlatOperator::FlatOperator(const TwoFormMatrix& omega, std::vector<Covector> etas)
    : b_(flat_matrix(omega, etas)), etas_(std::move(etas)), lu_(b_) {
    condition_ = linalg::condition_1(b_, lu_);
}

bool FlatOperator::degenerate() const {
    return lu_.singular() || !(condition_ < kDegenerateConditionLimit);
}

Covector FlatOperator::apply(std::span<const double> x) const {
    return Covector(linalg::mat_vec(b_, x));
}

std::vector<double> FlatOperator::solve(const Covector& rhs) const {
    if (degenerate()) throw DegenerateStructure(condition_);
    std::vector<double> x = lu_.solve(rhs.components);
    // one pass of iterative refinement
    std::vector<double> residual = linalg::mat_vec(b_, x);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = rhs[i] - residual[i];
    const std::vector<double> correction = lu_.solve(residual);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += correction[i];
    return x;
}

std::vector<std::vector<double>> reeb_family(const FlatOperator& op,
                                             std::span<const Covector> etas) {
    std::vector<std::vector<double>> fields;
    fields.reserve(etas.size());
    for (const Covector& eta : etas) fields.push_back(op.solve(eta));
    return fields;
}

} // namespace cosym
