#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "shearspec/sturm.hpp"
#include "support/fd_oracle.hpp"

using namespace shearspec;
constexpr double pi = std::numbers::pi;

TEST(Sturm, QLimitAtCentre) {
    const double A = 0.06;
    auto prob = build_Q(ShearProfile::oscillatory(1, A), 0.5);
    const double expected = -64.0 * pi * pi * pi * A / (1.0 + 4.0 * pi * A);
    EXPECT_NEAR(expected, -67.882, 5e-4);
    ASSERT_EQ(prob.singular_points.size(), 1u);
    EXPECT_NEAR(prob.singular_points[0].limit, expected, 1e-10);
    EXPECT_NEAR(prob.q(0.5), expected, 1e-10);
    // cross-check by extrapolating the raw quotient from y = 1/2 +- 1e-4
    auto U = ShearProfile::oscillatory(1, A);
    auto raw = [&](double y) { return U.eval(y, 2) / (U(y) - 0.5); };
    double h = 1e-4;
    double a = 0.5 * (raw(0.5 + h) + raw(0.5 - h)), b = 0.5 * (raw(0.5 + 2 * h) + raw(0.5 - 2 * h));
    EXPECT_NEAR((4 * a - b) / 3, expected, 1e-6);
    // continuity through the Taylor zone
    for (double d : {1e-9, 1e-7, 1e-5, 7.9e-5, 8.1e-5, 1e-3})
        EXPECT_NEAR(prob.q(0.5 + d), raw(0.5 + d), 1e-9 * std::abs(expected) + (d < 1e-6 ? 1e-4 : 0.0));
    // symmetric about 1/2 and finite on the grid
    for (int j = 0; j <= prob.N; ++j) {
        EXPECT_TRUE(std::isfinite(prob.Q[j]));
        EXPECT_NEAR(prob.Q[j], prob.Q[prob.N - j], 1e-9 * std::abs(expected));
    }
}

TEST(Sturm, QUpperEstimateOnCentralBand) {
    const double A = 0.06;
    auto prob = build_Q(ShearProfile::oscillatory(1, A), 0.5);
    const double bound = -2.0 * std::pow(8.0 * pi, 2) * A / (1.0 + 4.0 * pi * A);
    for (int j = 0; j <= prob.N; ++j)
        if (std::abs(prob.grid[j] - 0.5) <= 0.125) EXPECT_LE(prob.Q[j], bound + 1e-12);
}

TEST(Sturm, BuildQErrors) {
    EXPECT_THROW(build_Q(ShearProfile::linear(), 0.5), SingularPotentialError);
    EXPECT_THROW(build_Q(ShearProfile::oscillatory(1, 0.06), 0.3), SingularPotentialError);
    EXPECT_THROW(build_Q(ShearProfile::oscillatory(1, 0.2), 0.5), SingularPotentialError);
}

TEST(Sturm, FreeLaplacian) {
    auto prob = make_sl_problem([](double) { return 0.0; }, 64);
    auto s = solve_sl(prob, 6);
    for (int k = 1; k <= 6; ++k) {
        EXPECT_NEAR(s.eigenvalues[k - 1], k * k * pi * pi, 1e-8 * k * k * pi * pi);
        EXPECT_EQ(s.zero_counts[k - 1], k - 1);
        double err = 0.0;
        for (int j = 0; j <= 64; ++j)
            err = std::max(err, std::abs(s.eigenfunctions[k - 1][j] - std::sqrt(2.0) * std::sin(k * pi * prob.grid[j])));
        EXPECT_LT(err, 1e-8);
    }
}

TEST(Sturm, AgreesWithFiniteDifferenceOracle) {
    for (int n = 1; n <= 4; ++n) {
        for (double A : {0.045, 0.06, 0.075}) {
            auto prob = build_Q(ShearProfile::oscillatory(n, A), 0.5);
            auto s = solve_sl(prob, 2);
            double ref = oracle::lambda_reference(n, A);
            EXPECT_LT(std::abs(s.eigenvalues[0] - ref), 1e-6 * std::abs(ref)) << "n=" << n << " A=" << A;
            EXPECT_LT(s.eigenvalues[0], 0.0);
            EXPECT_LE(s.eigenvalues[0], lambda1_bound(n, amplitude_window(A).delta));
            EXPECT_GE(s.eigenvalues[1], -1e-8 * std::abs(s.eigenvalues[0]));
        }
    }
}

TEST(Sturm, OscillationTheorem) {
    auto prob = build_Q(ShearProfile::oscillatory(1, 0.06), 0.5);
    auto s = solve_sl(prob, 6);
    for (int k = 0; k < 6; ++k) EXPECT_EQ(s.zero_counts[k], k);
    for (int k = 1; k < 6; ++k) EXPECT_GT(s.eigenvalues[k], s.eigenvalues[k - 1]);
    for (int j = 1; j < prob.N; ++j) EXPECT_GT(s.eigenfunctions[0][j], 0.0);
    // L2 normalisation
    Eigen::VectorXd w = cheb::cc_weights(prob.N);
    EXPECT_NEAR((w.array() * s.eigenfunctions[2].array().square()).sum(), 1.0, 1e-12);
}

TEST(Sturm, RayleighQuotient) {
    auto free = make_sl_problem([](double) { return 0.0; }, 64);
    Eigen::VectorXd phi = (pi * free.grid.array()).sin();
    EXPECT_NEAR(rayleigh_quotient(free, phi), pi * pi, 1e-10);
    auto prob = build_Q(ShearProfile::oscillatory(1, 0.06), 0.5);
    auto s = solve_sl(prob, 1);
    EXPECT_NEAR(rayleigh_quotient(prob, s.eigenfunctions[0]), s.eigenvalues[0], 1e-6 * std::abs(s.eigenvalues[0]));
    double q = rayleigh_quotient(prob, plateau_test_function(1));
    EXPECT_LE(q, -6.729);
    EXPECT_GE(q, s.eigenvalues[0]);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(prob.N + 1);
    EXPECT_THROW(rayleigh_quotient(prob, zero), DomainError);
}

TEST(Sturm, PlateauTestFunction) {
    auto f = plateau_test_function(1);
    EXPECT_DOUBLE_EQ(f(0.5), 0.25);
    EXPECT_DOUBLE_EQ(f(0.125), 0.0);
    EXPECT_DOUBLE_EQ(f(0.875), 0.0);
    // integrals by exact piecewise formulas
    auto sq = [](const PiecewiseLinear& g) {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < g.knots.size(); ++i) {
            double a = g.values[i], b = g.values[i + 1], h = g.knots[i + 1] - g.knots[i];
            s += h * (a * a + a * b + b * b) / 3.0;
        }
        return s;
    };
    EXPECT_NEAR(sq(f), 5.0 / 192.0, 1e-15);
    auto g = plateau_test_function(2);
    double half = 0.0;
    for (std::size_t i = 0; i + 1 < g.knots.size(); ++i) {
        if (g.knots[i] >= 0.5) break;
        double h = g.knots[i + 1] - g.knots[i], d = (g.values[i + 1] - g.values[i]) / h;
        half += d * d * h;
    }
    EXPECT_NEAR(half, 1.0 / 8.0, 1e-14);
}

TEST(Sturm, Bound) {
    EXPECT_NEAR(lambda1_bound(1, 0.25), -6.6509, 1e-4);
    EXPECT_NEAR(lambda1_bound(2, 0.25), -26.604, 1e-3);
    EXPECT_NEAR(lambda1_bound(1, amplitude_window(0.06).delta), -6.729, 1e-3);
    EXPECT_THROW(lambda1_bound(1, 0.54), BoundError);
    EXPECT_THROW(lambda1_bound(1, 0.0), BoundError);
}

TEST(Sturm, BoundChain) {
    for (int n = 1; n <= 8; ++n) {
        for (double A : {0.045, 0.06, 0.075}) {
            auto p = ShearProfile::oscillatory(n, A);
            auto prob = build_Q(p, 0.5);
            double l1 = sl_eigenvalues(prob, 1)[0];
            double q = rayleigh_quotient(prob, plateau_test_function(n));
            EXPECT_LE(l1, q + 1e-9 * std::abs(q));
            EXPECT_LE(q, lambda1_bound(n, p.delta()));
        }
    }
}

TEST(Sturm, Certificate) {
    auto lin = certify_instability(ShearProfile::linear());
    EXPECT_FALSE(lin.unstable);
    auto c = certify_instability(ShearProfile::oscillatory(1, 0.06));
    ASSERT_TRUE(c.unstable);
    EXPECT_DOUBLE_EQ(c.witness_inflection, 0.5);
    EXPECT_GE(c.alpha_n, 2.594);
    EXPECT_NEAR(c.alpha_n, std::sqrt(-oracle::lambda_reference(1, 0.06)), 1e-6 * c.alpha_n);
    EXPECT_EQ(c.witnesses.size(), 3u);
    for (int j = 1; j < c.N; ++j) EXPECT_GT(c.phi_n[j], 0.0);
    EXPECT_THROW(certify_instability(ShearProfile::oscillatory(1, 0.1)), DomainError);
}

TEST(Sturm, SmallSmoothPerturbationIsStable) {
    // U = y + 0.001 sin(pi y) sin(4 pi y), tabulated
    const int N = 64;
    Eigen::VectorXd y = cheb::nodes(N);
    std::vector<double> s;
    for (int j = 0; j <= N; ++j) s.push_back(y[j] + 0.001 * std::sin(pi * y[j]) * std::sin(4 * pi * y[j]));
    auto c = certify_instability(ShearProfile::tabulated(s));
    EXPECT_FALSE(c.witnesses.empty());
    EXPECT_FALSE(c.unstable);
}

TEST(Sturm, NeutralWavenumberGrowsLinearly) {
    auto fit = fit_linear_growth({1, 2, 3, 4, 5, 6, 7, 8}, 0.06);
    EXPECT_GT(fit.c0, 0.0);
    EXPECT_LT(fit.C0 / fit.c0, 1.5);
    for (std::size_t i = 0; i < fit.n.size(); ++i) EXPECT_GE(fit.alpha_n[i], fit.c0 * fit.n[i]);
}
