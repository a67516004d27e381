#include "cosym/geometry.hpp"

#include "cosym/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cosym;
using cosym::testing::Rng;
using cosym::testing::rank_oracle;

namespace {

Covector unit_covector(std::size_t dim, std::size_t slot, double value = 1.0) {
    Covector c(dim);
    c[slot] = value;
    return c;
}

std::vector<double> unit_vector(std::size_t dim, std::size_t slot) {
    std::vector<double> v(dim, 0.0);
    v[slot] = 1.0;
    return v;
}

// omega with m Darboux pairs followed by p slack coordinates, plus p random
// covectors: a generic order-p structure away from any system class
struct RandomStructure {
    TwoFormMatrix omega;
    std::vector<Covector> etas;
};

RandomStructure random_structure(Rng& rng, std::size_t m, std::size_t p) {
    const std::size_t d = 2 * m + p;
    RandomStructure out;
    out.omega.w = linalg::Matrix(d, d);
    for (std::size_t i = 0; i < m; ++i) {
        out.omega.w(i, m + i) = 1.0;
        out.omega.w(m + i, i) = -1.0;
    }
    for (std::size_t k = 0; k < p; ++k) {
        Covector eta(d);
        for (std::size_t j = 0; j < d; ++j) eta[j] = rng.uniform(-1, 1);
        eta[2 * m + k] += 2.0; // keep the slack components dominant
        out.etas.push_back(std::move(eta));
    }
    return out;
}

} // namespace

TEST_CASE("two-form blocks per class") {
    SUBCASE("simple closed, one pair") {
        const ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
        const TwoFormMatrix omega = build_two_form(chart);
        REQUIRE(omega.dimension() == 3);
        CHECK(omega.w(0, 1) == 1.0);
        CHECK(omega.w(1, 0) == -1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(omega.w(2, j) == 0.0);
            CHECK(omega.w(j, 2) == 0.0);
        }
        CHECK(rank_oracle(omega.w) == 2);
    }
    SUBCASE("mass transfer") {
        const ChartSpec chart = ChartSpec::make(SystemClass::MassTransfer, 1, 1);
        const TwoFormMatrix omega = build_two_form(chart);
        REQUIRE(omega.dimension() == 5);
        CHECK(omega.w(chart.w_index(0), chart.n_index(0)) == 1.0);
        CHECK(rank_oracle(omega.w) == 4);
    }
    SUBCASE("non-simple ranks follow dimension minus eta count") {
        const ChartSpec c1 = ChartSpec::make(SystemClass::NonSimple, 1, 0, 1);
        CHECK(c1.dimension() == 7);
        CHECK(rank_oracle(build_two_form(c1).w) == 6);

        const ChartSpec c2 = ChartSpec::make(SystemClass::NonSimple, 2, 0, 1);
        CHECK(c2.dimension() == 9);
        CHECK(rank_oracle(build_two_form(c2).w) == 8);

        const ChartSpec c3 = ChartSpec::make(SystemClass::NonSimple, 1, 0, 2);
        CHECK(c3.dimension() == 12);
        CHECK(rank_oracle(build_two_form(c3).w) == 10);
    }
    SUBCASE("gamma block signs") {
        const ChartSpec chart = ChartSpec::make(SystemClass::OpenSimple, 1);
        const TwoFormMatrix omega = build_two_form(chart);
        CHECK(omega.w(chart.gamma_index(0), chart.s_index(0)) == 1.0);
        CHECK(omega.w(chart.gamma_index(0), chart.sigma_index(0)) == -1.0);
        CHECK(rank_oracle(omega.w) == chart.dimension() - 1);
    }
    SUBCASE("antisymmetry is exact for every class") {
        for (const auto& chart :
             {ChartSpec::make(SystemClass::SimpleClosed, 3),
              ChartSpec::make(SystemClass::MassTransfer, 2, 3),
              ChartSpec::make(SystemClass::NonSimple, 2, 0, 3),
              ChartSpec::make(SystemClass::OpenSimple, 2, 0, 0, 2, 1)}) {
            const TwoFormMatrix omega = build_two_form(chart);
            for (std::size_t r = 0; r < omega.dimension(); ++r)
                for (std::size_t c = 0; c < omega.dimension(); ++c)
                    CHECK(omega.w(r, c) == -omega.w(c, r));
        }
    }
}

TEST_CASE("chart layout constraints") {
    CHECK_THROWS_AS(ChartSpec::make(SystemClass::SimpleClosed, 0), LayoutMismatch);
    CHECK_THROWS_AS(ChartSpec::make(SystemClass::MassTransfer, 1, 0), LayoutMismatch);
    CHECK_THROWS_AS(ChartSpec::make(SystemClass::NonSimple, 1, 3, 2), LayoutMismatch);
    CHECK_THROWS_AS(ChartSpec::make(SystemClass::SimpleClosed, 1, 1), LayoutMismatch);

    const ChartSpec chart = ChartSpec::make(SystemClass::NonSimple, 2, 0, 2);
    CHECK(chart.coordinates ==
          std::vector<std::string>{"q1", "q2", "p1", "p2", "W1", "W2", "N1", "N2", "Gamma1",
                                   "Gamma2", "S1", "S2", "Sigma1", "Sigma2"});
    const ChartSpec vel = chart.velocity_variant();
    CHECK(vel.coordinates[vel.p_index(0)] == "qdot1");
    CHECK(vel.momentum_variant().coordinates == chart.coordinates);
}

TEST_CASE("flat operator reproduces the coordinate images of the simple class") {
    // eta = -T dS - F_1 dq with T = 2, F_1 = 0.7
    const ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    const TwoFormMatrix omega = build_two_form(chart);
    const double T = 2.0, F1 = 0.7;
    Covector eta(3);
    eta[chart.s_index(0)] = -T;
    eta[chart.q_index(0)] = -F1;
    const FlatOperator flat(omega, {eta});

    SUBCASE("flat(d/dq) = dp - F_1 eta") {
        const Covector img = flat.apply(unit_vector(3, chart.q_index(0)));
        CHECK(img[chart.q_index(0)] == doctest::Approx(-F1 * eta[0]).epsilon(1e-15));
        CHECK(img[chart.p_index(0)] == 1.0);
        CHECK(img[chart.s_index(0)] == doctest::Approx(-F1 * eta[2]).epsilon(1e-15));
    }
    SUBCASE("flat(d/dp) = -dq") {
        const Covector img = flat.apply(unit_vector(3, chart.p_index(0)));
        CHECK(img[chart.q_index(0)] == -1.0);
        CHECK(img[chart.p_index(0)] == 0.0);
        CHECK(img[chart.s_index(0)] == 0.0);
    }
    SUBCASE("flat(d/dS) = -T eta") {
        const Covector img = flat.apply(unit_vector(3, chart.s_index(0)));
        CHECK(img[chart.q_index(0)] == doctest::Approx(-T * eta[0]).epsilon(1e-15));
        CHECK(img[chart.p_index(0)] == 0.0);
        CHECK(img[chart.s_index(0)] == doctest::Approx(-T * eta[2]).epsilon(1e-15));
    }
}

TEST_CASE("solve then apply is the identity") {
    Rng rng(42);
    for (int trial = 0; trial < 250; ++trial) {
        const std::size_t m = 1 + static_cast<std::size_t>(rng.pick(3));
        const std::size_t p = 1 + static_cast<std::size_t>(rng.pick(3));
        const RandomStructure s = random_structure(rng, m, p);
        const FlatOperator flat(s.omega, s.etas);
        if (flat.condition_estimate() > 1e6) continue;

        std::vector<double> x(flat.dimension());
        for (double& v : x) v = rng.uniform(-3, 3);
        const Covector image = flat.apply(x);
        const std::vector<double> back = flat.solve(image);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(back[i] - x[i]) <= 1e-10 * (1.0 + std::abs(x[i])));

        // residual guarantee of solve
        const Covector rhs = image;
        const Covector check = flat.apply(flat.solve(rhs));
        double rhs_norm = linalg::norm_inf(rhs.components);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(check[i] - rhs[i]) <= 1e-10 * (1.0 + rhs_norm));
    }
}

TEST_CASE("LU solve agrees with the explicit dense inverse") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const RandomStructure s = random_structure(rng, 2, 2);
        const FlatOperator flat(s.omega, s.etas);
        if (flat.condition_estimate() > 1e6) continue;
        const linalg::LuDecomposition lu(flat.matrix());
        const linalg::Matrix inv = lu.inverse();
        Covector rhs(flat.dimension());
        for (std::size_t i = 0; i < flat.dimension(); ++i) rhs[i] = rng.uniform(-2, 2);
        const std::vector<double> via_solve = flat.solve(rhs);
        const std::vector<double> via_inverse = linalg::mat_vec(inv, rhs.components);
        for (std::size_t i = 0; i < flat.dimension(); ++i)
            CHECK(std::abs(via_solve[i] - via_inverse[i]) <= 1e-10 * (1.0 + std::abs(via_solve[i])));
    }
}

TEST_CASE("Reeb field of the pure cosymplectic structure is d/dS") {
    const ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 2);
    const TwoFormMatrix omega = build_two_form(chart);
    const Covector eta = unit_covector(chart.dimension(), chart.s_index(0));
    const FlatOperator flat(omega, {eta});
    const auto reeb = reeb_family(flat, std::vector<Covector>{eta});
    REQUIRE(reeb.size() == 1);
    for (std::size_t i = 0; i < chart.dimension(); ++i)
        CHECK(reeb[0][i] == doctest::Approx(i == chart.s_index(0) ? 1.0 : 0.0).epsilon(1e-14));
}

TEST_CASE("Reeb duality and kernel conditions across random order-p structures") {
    Rng rng(2025);
    for (std::size_t p = 1; p <= 3; ++p) {
        int done = 0;
        while (done < 60) {
            const RandomStructure s = random_structure(rng, 1 + rng.pick(3), p);
            const FlatOperator flat(s.omega, s.etas);
            if (flat.condition_estimate() > 1e5) continue;
            const auto reeb = reeb_family(flat, s.etas);
            for (std::size_t k = 0; k < p; ++k) {
                const Covector contraction = s.omega.contract(reeb[k]);
                for (std::size_t j = 0; j < flat.dimension(); ++j)
                    CHECK(std::abs(contraction[j]) <= 1e-10);
                for (std::size_t j = 0; j < p; ++j)
                    CHECK(std::abs(s.etas[j].pair(reeb[k]) - (j == k ? 1.0 : 0.0)) <= 1e-10);
            }
            ++done;
        }
    }
}

TEST_CASE("Reeb field scales inversely with a pure entropy eta") {
    const ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    const TwoFormMatrix omega = build_two_form(chart);
    const double c = 2.75;
    const FlatOperator unit(omega, {unit_covector(3, chart.s_index(0), 1.0)});
    const FlatOperator scaled(omega, {unit_covector(3, chart.s_index(0), c)});
    const auto r1 = reeb_family(unit, std::vector<Covector>{unit_covector(3, 2, 1.0)});
    const auto rc = reeb_family(scaled, std::vector<Covector>{unit_covector(3, 2, c)});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(rc[0][i] == doctest::Approx(r1[0][i] / c).epsilon(1e-13));
}

TEST_CASE("symmetric/antisymmetric split of the flat matrix") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const RandomStructure s = random_structure(rng, 2, 2);
        const FlatOperator flat(s.omega, s.etas);
        const linalg::Matrix& b = flat.matrix();
        const linalg::Matrix mw = s.omega.w.transposed();
        const std::size_t d = flat.dimension();
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                // B - B^T recovers the two-form part
                CHECK(std::abs((b(r, c) - b(c, r)) - (mw(r, c) - mw(c, r))) <= 1e-14);
                double dyad = 0.0;
                for (const Covector& eta : s.etas) dyad += eta[r] * eta[c];
                CHECK(std::abs(b(r, c) + b(c, r) - 2.0 * dyad) <= 1e-15);
            }
    }
}

TEST_CASE("degenerate structures are rejected") {
    const ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    const TwoFormMatrix omega = build_two_form(chart);

    SUBCASE("eta without its entropy component leaves a singular operator") {
        Covector eta(3);
        eta[chart.q_index(0)] = -0.4; // friction only; dS part lost
        const FlatOperator flat(omega, {eta});
        CHECK(flat.degenerate());
        CHECK_THROWS_AS(flat.solve(unit_covector(3, 0)), DegenerateStructure);
    }
    SUBCASE("determinant certificate agrees with the temperature test") {
        Rng rng(31337);
        for (int trial = 0; trial < 200; ++trial) {
            const double T = rng.pick(4) == 0 ? 0.0 : rng.uniform(0.2, 3.0);
            Covector eta(3);
            eta[chart.s_index(0)] = -T;
            eta[chart.q_index(0)] = rng.uniform(-1, 1);
            const FlatOperator flat(omega, {eta});
            const bool nondegenerate_by_det = std::abs(flat.determinant()) > 1e-9;
            CHECK(nondegenerate_by_det == (T != 0.0));
        }
    }
}
