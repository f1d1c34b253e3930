#include <gtest/gtest.h>

#include <cmath>

#include "shearspec/orr_sommerfeld.hpp"

using namespace shearspec;

namespace {

struct U1Fixture {
    ShearProfile U = ShearProfile::oscillatory(1, 0.06);
    InstabilityCertificate cert = certify_instability(U);
    double alpha0 = 0.5 * cert.alpha_n;
    cplx c0 = solve_rayleigh(U, alpha0, {0.5, 0.05}).mode->c;
};

const U1Fixture& u1() {
    static U1Fixture f;
    return f;
}

}  // namespace

TEST(OrrSommerfeld, CouetteIsStable) {
    for (double a : {0.5, 1.0, 2.0}) {
        for (double R : {1e3, 1e4, 1e5}) {
            auto s = solve_os({ShearProfile::linear(), a, R, 0});
            EXPECT_LT(s.max_imag_all, 0.0) << "alpha=" << a << " R=" << R;
            ASSERT_FALSE(s.modes.empty());
            EXPECT_LT(s.modes.front().c.imag(), 0.0);
        }
    }
}

TEST(OrrSommerfeld, CouetteDecayScalesWithR) {
    // alpha Im c * R bounded above by a negative constant across the pair
    double worst = -1e300;
    for (double R : {1e3, 1e4}) {
        auto s = solve_os({ShearProfile::linear(), 1.0, R, 0});
        worst = std::max(worst, 1.0 * s.max_imag_all * R);
    }
    EXPECT_LT(worst, 0.0);
}

TEST(OrrSommerfeld, RetainedModesSatisfyClampedConditions) {
    auto s = solve_os({ShearProfile::oscillatory(1, 0.06), 3.0, 1e5, 0});
    ASSERT_FALSE(s.modes.empty());
    Eigen::MatrixXd D = cheb::diff_matrix(s.N);
    for (const auto& m : s.modes) {
        double mx = m.phi.cwiseAbs().maxCoeff();
        Eigen::VectorXcd d = D.cast<cplx>() * m.phi;
        EXPECT_LT(std::abs(m.phi[0]), 1e-10 * mx);
        EXPECT_LT(std::abs(m.phi[s.N]), 1e-10 * mx);
        EXPECT_LT(std::abs(d[0]), 1e-10 * mx * s.N * s.N);
        EXPECT_LT(std::abs(d[s.N]), 1e-10 * mx * s.N * s.N);
        EXPECT_LT(m.refinement_delta, 1e-6);
        EXPECT_EQ(m.kind, ModeKind::orr_sommerfeld);
    }
    for (std::size_t i = 1; i < s.modes.size(); ++i) EXPECT_GE(s.modes[i - 1].c.imag(), s.modes[i].c.imag());
}

TEST(OrrSommerfeld, ViscousInstabilityNearInviscidValue) {
    const auto& f = u1();
    auto s = solve_os({f.U, f.alpha0, 1e6, 0});
    ASSERT_FALSE(s.modes.empty());
    EXPECT_GT(s.modes.front().c.imag(), s.threshold);
    EXPECT_LT(std::abs(s.modes.front().c - f.c0), 1e-3);
}

TEST(OrrSommerfeld, TrackToInviscidLimit) {
    const auto& f = u1();
    auto t = track_inviscid_limit(f.U, f.alpha0, f.c0, {1e4, 1e5, 1e6, 1e7});
    ASSERT_EQ(t.path.size(), 4u);
    for (std::size_t i = 1; i < t.path.size(); ++i) EXPECT_LT(t.path[i].defect, t.path[i - 1].defect);
    EXPECT_TRUE(t.defect_decreased);
    EXPECT_GT(t.slope, -1.0);
    EXPECT_LT(t.slope, -0.25);
    EXPECT_LT(t.path.back().defect, 1e-2);
    // norm growth in |gamma|: s = 0 stays bounded, s = 2 grows faster than s = 1
    auto g = boundary_layer_growth(t.modes[1], t.modes[2], {0, 1, 2});
    EXPECT_LT(std::abs(g[0].exponent), 0.05);
    EXPECT_GT(g[2].exponent, g[1].exponent);
}

TEST(OrrSommerfeld, TrivialSchedule) {
    const auto& f = u1();
    auto t = track_inviscid_limit(f.U, f.alpha0, f.c0, {1e5});
    EXPECT_EQ(t.path.size(), 1u);
    EXPECT_FALSE(t.defect_decreased);
    EXPECT_TRUE(std::isnan(t.slope));
    EXPECT_THROW(track_inviscid_limit(f.U, f.alpha0, f.c0, {1e5, 1e4}), DomainError);
}

TEST(OrrSommerfeld, SobolevNorms) {
    const auto& f = u1();
    auto s = solve_os({f.U, f.alpha0, 1e5, 0});
    auto n = boundary_layer_diagnostic(s.modes.front(), {0, 1, 2});
    ASSERT_EQ(n.size(), 3u);
    EXPECT_LT(n[0].second, n[1].second);
    EXPECT_LT(n[1].second, n[2].second);
    EXPECT_THROW(boundary_layer_diagnostic(s.modes.front(), {0.5}), DomainError);
}

TEST(OrrSommerfeld, ResolutionWarning) {
    auto s = solve_os({ShearProfile::linear(), 1.0, 1e9, 64});
    EXPECT_FALSE(s.warnings.empty());
}

TEST(OrrSommerfeld, GrowthRateAcrossN) {
    EXPECT_TRUE(growth_rate_vs_n({}, 0.06, 1e6).empty());
    GrowthOptions o;
    o.alpha_fractions = {0.5};
    auto rows = growth_rate_vs_n({1, 2}, 0.06, 1e6, o);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) EXPECT_GT(r.max_growth, 0.0);
    auto control = growth_rate_vs_n({1}, 0.0, 1e6, o);
    EXPECT_FALSE(control[0].certified_unstable);
    EXPECT_LT(control[0].max_growth, 0.0);
}
