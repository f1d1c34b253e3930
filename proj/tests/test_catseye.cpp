#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "shearspec/catseye.hpp"
#include "shearspec/contour.hpp"

using namespace shearspec;

namespace {

constexpr double pi = std::numbers::pi;

struct Fixture {
    ShearProfile U = ShearProfile::oscillatory(1, 0.06);
    InstabilityCertificate cert = certify_instability(U);
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

// Q of U_1 written out by hand, with the removable singularity at 1/2 handled by L'Hopital
double q_direct(double y, double A) {
    if (std::abs(y - 0.5) < 1e-12) return -64.0 * pi * pi * pi * A / (1.0 + 4.0 * pi * A);
    double U = y + A * std::sin(4 * pi * y);
    double U2 = -16 * pi * pi * A * std::sin(4 * pi * y);
    return U2 / (U - 0.5);
}

}  // namespace

TEST(CatsEye, PsiStarClosedForm) {
    EXPECT_NEAR(psi_star(1, 0.06, 0.5), 0.0, 1e-16);
    EXPECT_NEAR(psi_star(1, 0.06, 0.0), 0.125, 1e-16);
    // derivative chain against finite differences
    for (double y : {0.1, 0.37, 0.8}) {
        double h = 1e-5;
        EXPECT_NEAR((psi_star(2, 0.05, y + h) - psi_star(2, 0.05, y - h)) / (2 * h), psi_star(2, 0.05, y, 1), 1e-8);
        EXPECT_NEAR((psi_star(2, 0.05, y + h, 1) - psi_star(2, 0.05, y - h, 1)) / (2 * h), psi_star(2, 0.05, y, 2), 1e-6);
    }
    // symmetric about y = 1/2
    for (double y : {0.05, 0.2, 0.45}) EXPECT_NEAR(psi_star(1, 0.06, y), psi_star(1, 0.06, 1 - y), 1e-15);
}

TEST(CatsEye, BuildFIdentities) {
    auto F = build_f(fx().U);
    const double A = 0.06;
    // f(psi*(y)) = U'(y); at y = 1/4 this is delta and f' = Q(1/4) = 0
    double s = psi_star(1, A, 0.25);
    EXPECT_NEAR(F(s), 1.0 - 4 * pi * A, 1e-13);
    EXPECT_NEAR(F.fprime(s), 0.0, 1e-10);
    EXPECT_NEAR(F.fprime(0.0), q_direct(0.5, A), 1e-10);
    EXPECT_NEAR(F.fprime(0.0), -67.882, 1e-3);
    for (double y = 0.01; y < 0.5; y += 0.01) {
        double sy = psi_star(1, A, y);
        EXPECT_NEAR(F.fprime(sy), q_direct(y, A), 1e-6) << y;
        EXPECT_NEAR(F.y_of(sy), y, 1e-10);
    }
    EXPECT_LT(reconstruction_residual(F), 1e-6);
}

TEST(CatsEye, KnotTable) {
    auto F = build_f(fx().U);
    ASSERT_EQ(F.knots.size(), F.values.size());
    ASSERT_EQ(F.knots.size(), F.derivative_table.size());
    EXPECT_EQ(F.knots.front(), 0.0);
    EXPECT_NEAR(F.knots.back(), 0.125, 1e-15);
    EXPECT_NEAR(F.domain_hi, 0.125, 1e-15);
    for (std::size_t i = 1; i < F.knots.size(); ++i) EXPECT_GT(F.knots[i], F.knots[i - 1]);
    for (std::size_t i = 0; i < F.knots.size(); ++i) EXPECT_NEAR(F(F.knots[i]), F.values[i], 1e-12);
}

TEST(CatsEye, ContinuationBelowZero) {
    // for s < 0 the preimage is y = 1/2 + i t; f and f' are then cosh/sinh expressions
    auto F = build_f(fx().U);
    const double A = 0.06, t = 0.02, k = 4 * pi;
    double s = -0.5 * t * t + A / (4 * pi) * (1 - std::cosh(k * t));
    EXPECT_NEAR(F(s), 1 + 4 * pi * A * std::cosh(k * t), 1e-12);
    double fp = -16 * pi * pi * A * std::sinh(k * t) / (t + A * std::sinh(k * t));
    EXPECT_NEAR(F.fprime(s), fp, 1e-9);
}

TEST(CatsEye, BuildFRejectsInvalidProfiles) {
    EXPECT_THROW(build_f(ShearProfile::linear()), DomainError);
    EXPECT_THROW(build_f(ShearProfile::oscillatory(1, 0.09)), DomainError);  // U not monotone
    EXPECT_THROW(build_f(ShearProfile::sine_series({0.01})), DomainError);
}

TEST(CatsEye, LeadingOrderWave) {
    const auto& f = fx();
    auto w0 = leading_order_wave(f.U, f.cert, 0.0);
    for (Eigen::Index i = 0; i < w0.xi.size(); ++i)
        for (Eigen::Index j = 0; j < w0.y.size(); ++j) EXPECT_EQ(w0.psi_rel(i, j), psi_star(1, 0.06, w0.y[j]));
    auto w = leading_order_wave(f.U, f.cert, 1e-3);
    EXPECT_EQ(w.order, WaveOrder::leading);
    EXPECT_NEAR(w.alpha_sq, f.cert.alpha_n * f.cert.alpha_n, 1e-12);
    const Eigen::Index nx = w.xi.size();
    for (Eigen::Index i = 0; i < nx; ++i) {
        EXPECT_EQ(w.psi_rel(i, 0), w.psi_rel(0, 0));
        EXPECT_EQ(w.psi_rel(i, w.y.size() - 1), w.psi_rel(0, w.y.size() - 1));
        for (Eigen::Index j = 0; j < w.y.size(); ++j) EXPECT_EQ(w.psi_rel(i, j), w.psi_rel(nx - 1 - i, j));
    }
    // phi_n > 0, so the xi-maximum at fixed y sits at xi = 0 and the minimum at pi
    for (Eigen::Index j = 1; j + 1 < w.y.size(); ++j) {
        Eigen::Index im;
        w.psi_rel.col(j).maxCoeff(&im);
        EXPECT_TRUE(im == 0 || im == nx - 1);
    }
    EXPECT_THROW(leading_order_wave(f.U, f.cert, -1e-3), DomainError);
    EXPECT_THROW(leading_order_wave(ShearProfile::linear(), certify_instability(ShearProfile::linear()), 1e-3),
                 DomainError);
}

TEST(CatsEye, PeriodScalesLikeOneOverN) {
    std::vector<double> scaled;
    for (int n = 1; n <= 4; ++n) {
        auto U = ShearProfile::oscillatory(n, 0.06);
        auto w = leading_order_wave(U, certify_instability(U), 1e-3);
        scaled.push_back(w.period() * n);
    }
    for (double v : scaled) EXPECT_NEAR(v / scaled[0], 1.0, 0.05);
}

TEST(CatsEye, NewtonBranchRoot) {
    const auto& f = fx();
    auto w = newton_branch(f.U, f.cert, 0.0);
    EXPECT_LE(w.iterations, 1);
    EXPECT_NEAR(w.alpha_sq, w.alpha_n_sq, 1e-12);
    double d = 0.0;
    for (Eigen::Index i = 0; i < w.xi.size(); ++i)
        for (Eigen::Index j = 0; j < w.y.size(); ++j)
            d = std::max(d, std::abs(w.psi_rel(i, j) - psi_star(1, 0.06, w.y[j])));
    EXPECT_LT(d, 1e-10);
    // grid neutral value agrees with the certificate
    EXPECT_NEAR(w.alpha_n_sq, f.cert.alpha_n * f.cert.alpha_n, 1e-8);
}

TEST(CatsEye, NewtonBranchQuadraticRemainder) {
    const auto& f = fx();
    auto d = [&](double b) {
        auto wn = newton_branch(f.U, f.cert, b);
        EXPECT_LT(wn.residual, 1e-8);
        return wave_distance(wn, leading_order_wave(f.U, f.cert, b));
    };
    double d1 = d(1e-3), d2 = d(5e-4);
    EXPECT_GE(d1 / d2, 1.8);
    // K = d / beta^2 roughly constant
    EXPECT_NEAR((d1 / 1e-6) / (d2 / 2.5e-7), 1.0, 0.05);
}

TEST(CatsEye, AlphaSquaredContinuity) {
    const auto& f = fx();
    double prev = 1e300;
    for (double b : {1e-2, 1e-3, 1e-4}) {
        auto w = newton_branch(f.U, f.cert, b);
        double dev = std::abs(w.alpha_sq - w.alpha_n_sq);
        EXPECT_LT(dev, prev);
        prev = dev;
    }
}

TEST(CatsEye, NewtonWaveInvariants) {
    const auto& f = fx();
    auto w = newton_branch(f.U, f.cert, 5e-3);
    const Eigen::Index nx = w.xi.size(), ny = w.y.size();
    for (Eigen::Index i = 0; i < nx; ++i) {
        EXPECT_NEAR(w.psi_rel(i, 0), w.psi_rel(0, 0), 1e-12);
        EXPECT_NEAR(w.psi_rel(i, ny - 1), w.psi_rel(0, ny - 1), 1e-12);
        for (Eigen::Index j = 0; j < ny; ++j) EXPECT_EQ(w.psi_rel(i, j), w.psi_rel(nx - 1 - i, j));
    }
    // spectral evaluator reproduces the grid and keeps the walls flat in xi
    for (double x : {0.3, 1.7, 4.0}) {
        EXPECT_NEAR(w(x, 0.0), w(0.0, 0.0), 1e-12);
        EXPECT_NEAR(w(x, 1.0), w(0.0, 1.0), 1e-12);
        EXPECT_NEAR(w(x, 0.4), w(2 * pi - x, 0.4), 1e-14);
    }
    for (Eigen::Index i = 0; i < nx; i += 3)
        for (Eigen::Index j = 0; j < ny; j += 7) EXPECT_NEAR(w(w.xi[i], w.y[j]), w.psi_rel(i, j), 1e-12);
}

TEST(CatsEye, MaxNewtonBeta) {
    const auto& f = fx();
    auto w = max_newton_beta(f.U, f.cert);
    EXPECT_GT(w.beta, 0.0);
    EXPECT_LE(w.beta, 1e-2);
}

TEST(CatsEye, CriticalPointsLeadingOrder) {
    const auto& f = fx();
    for (double b : {1e-3, 1e-2}) {
        auto cps = critical_points(leading_order_wave(f.U, f.cert, b));
        ASSERT_EQ(cps.size(), 2u);
        EXPECT_NEAR(cps[0].xi, 0.0, 1e-10);
        EXPECT_NEAR(cps[0].y, 0.5, 1e-10);
        EXPECT_EQ(cps[0].classification, CriticalKind::saddle);
        EXPECT_LT(cps[0].hessian_det, 0.0);
        EXPECT_NEAR(cps[1].xi, pi, 1e-10);
        EXPECT_NEAR(cps[1].y, 0.5, 1e-10);
        EXPECT_EQ(cps[1].classification, CriticalKind::center);
        EXPECT_GT(cps[1].hessian_det, 0.0);
    }
    EXPECT_TRUE(critical_points(leading_order_wave(f.U, f.cert, 0.0)).empty());
}

TEST(CatsEye, SaddleHessian) {
    // psi_xixi = -beta phi_n(1/2) and psi_yy = U'(1/2) + beta phi_n''(1/2) at the saddle
    const auto& f = fx();
    const double b = 1e-3;
    auto w = leading_order_wave(f.U, f.cert, b);
    auto phi = cheb::Series::from_values(f.cert.phi_n);
    Eigen::Matrix2d H = w.field.hessian(0.0, 0.5);
    EXPECT_NEAR(H(0, 0), -b * phi(0.5), 1e-14);
    EXPECT_NEAR(H(1, 1), 1 + 4 * pi * 0.06 + b * phi.derivative().derivative()(0.5), 1e-9);
    EXPECT_NEAR(H(0, 1), 0.0, 1e-14);
}

TEST(CatsEye, CriticalPointsNewtonWave) {
    const auto& f = fx();
    for (int n : {1, 2}) {
        auto U = ShearProfile::oscillatory(n, 0.06);
        auto cps = critical_points(newton_branch(U, certify_instability(U), 1e-3));
        ASSERT_EQ(cps.size(), 2u) << n;
        EXPECT_EQ(cps[0].classification, CriticalKind::saddle);
        EXPECT_EQ(cps[1].classification, CriticalKind::center);
        EXPECT_NEAR(cps[0].y, 0.5, 1e-8);
        EXPECT_NEAR(cps[1].xi, pi, 1e-8);
    }
    (void)f;
}

TEST(CatsEye, Streamlines) {
    const auto& f = fx();
    auto w = leading_order_wave(f.U, f.cert, 1e-2);
    auto cps = critical_points(w);
    ASSERT_EQ(cps.size(), 2u);
    const auto& saddle = cps[0];
    const auto& center = cps[1];
    ContourGrid g;
    const double dxi = 2 * pi / g.nxi, dy = 1.0 / g.ny;

    auto sep = streamlines(w, {saddle.value}, g);
    ASSERT_FALSE(sep.empty());
    double best = 1e9;
    for (const auto& pl : sep)
        for (auto [x, y] : pl.points) {
            double dx = std::min(std::abs(x - saddle.xi), 2 * pi - std::abs(x - saddle.xi));
            best = std::min(best, std::hypot(dx / dxi, (y - saddle.y) / dy));
        }
    EXPECT_LE(best, std::sqrt(2.0));

    double lvl = center.value + 0.1 * (saddle.value - center.value);
    auto loops = streamlines(w, {lvl}, g);
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_TRUE(loops[0].closed);
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (auto [x, y] : loops[0].points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        EXPECT_NEAR(w(x, y), lvl, 1e-4);
    }
    EXPECT_LT(xmin, pi);
    EXPECT_GT(xmax, pi);
    EXPECT_LT(ymin, 0.5);
    EXPECT_GT(ymax, 0.5);
    EXPECT_LT(xmax - xmin, pi);

    double top = -1e300;
    for (Eigen::Index i = 0; i < w.psi_rel.size(); ++i) top = std::max(top, w.psi_rel.data()[i]);
    EXPECT_TRUE(streamlines(w, {top + 1.0}, g).empty());

    // open streamlines outside the eye cross the whole period and end on the seam
    auto open = streamlines(w, {psi_star(1, 0.06, 0.3)}, g);
    for (const auto& pl : open) {
        EXPECT_FALSE(pl.closed);
        for (auto [x, y] : pl.points) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 2 * pi);
        }
    }
}
