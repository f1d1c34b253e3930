// Acceptance suite: one PASS/FAIL line per criterion. `acceptance --criterion N` runs one of them.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shearspec/catseye.hpp"
#include "shearspec/orr_sommerfeld.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/rayleigh.hpp"
#include "shearspec/shear3d.hpp"
#include "shearspec/sturm.hpp"
#include "support/fd_oracle.hpp"

using namespace shearspec;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[fail] " << what << "; ";
        }
    }
    template <class T>
    Verdict& operator<<(const T& v) {
        detail << v;
        return *this;
    }
};

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

const std::vector<int> n_grid = {1, 2, 3, 4};
const std::vector<double> A_grid = {0.045, 0.06, 0.075};

// ---------------------------------------------------------------------------
Verdict criterion1() {
    Verdict v;
    double worst_rel = 0.0, worst_margin = -1e300;
    for (int n : n_grid)
        for (double A : A_grid) {
            auto U = ShearProfile::oscillatory(n, A);
            auto cert = certify_instability(U);
            const double bound = lambda1_bound(n, U.delta());
            const double ref = oracle::lambda_reference(n, A);
            const double rel = std::abs(cert.lambda1 - ref) / std::abs(ref);
            const std::string tag = "n=" + std::to_string(n) + " A=" + sci(A);
            v.check(cert.lambda1 < 0.0, tag + " lambda1 >= 0");
            v.check(cert.lambda1 <= bound, tag + " lambda1=" + sci(cert.lambda1) + " above bound " + sci(bound));
            v.check(rel < 1e-6, tag + " oracle rel diff " + sci(rel));
            worst_rel = std::max(worst_rel, rel);
            worst_margin = std::max(worst_margin, cert.lambda1 - bound);
        }
    v << "12 cases; max |lambda1 - oracle|/|oracle| = " << sci(worst_rel)
      << "; max (lambda1 - bound) = " << sci(worst_margin);
    return v;
}

Verdict criterion2() {
    Verdict v;
    double worst = 1e300;
    for (int n : n_grid)
        for (double A : A_grid) {
            auto cert = certify_instability(ShearProfile::oscillatory(n, A));
            double r = cert.lambda2 / std::abs(cert.lambda1);
            v.check(cert.lambda2 >= -1e-8 * std::abs(cert.lambda1),
                    "n=" + std::to_string(n) + " A=" + sci(A) + " lambda2=" + sci(cert.lambda2));
            worst = std::min(worst, r);
        }
    v << "12 cases; min lambda2/|lambda1| = " << sci(worst);
    return v;
}

Verdict criterion3() {
    Verdict v;
    double worst = 0.0;
    for (int n : n_grid)
        for (double A : A_grid) {
            auto cert = certify_instability(ShearProfile::oscillatory(n, A));
            auto m = neutral_mode(cert);
            v.check(m.residual < 1e-6, "n=" + std::to_string(n) + " A=" + sci(A) + " residual " + sci(m.residual));
            v.check(m.c == cplx(0.5, 0.0) && std::abs(m.alpha - std::sqrt(-cert.lambda1)) < 1e-14,
                    "anchor is not (sqrt(-lambda1), 1/2)");
            worst = std::max(worst, m.residual);
        }
    v << "12 anchors (alpha_n, c=1/2, phi_n); max Rayleigh residual = " << sci(worst);
    return v;
}

Verdict criterion4() {
    Verdict v;
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    auto br = continue_branch(U, cert, 0.0, 60);
    auto negs = cert.negative_eigenvalues();
    v.check(!br.samples.empty(), "no unstable samples");
    double lo = 1e300, hi = -1e300;
    for (const auto& s : br.samples) {
        lo = std::min(lo, s.alpha);
        hi = std::max(hi, s.alpha);
        v.check(s.c.imag() > br.threshold, "sample with Im c below threshold");
    }
    // the interval runs up to its located endpoint, not just the last sample
    for (const auto& e : br.ends)
        if (e.closed) hi = std::max(hi, e.alpha);
    v.check(lo < cert.alpha_n && cert.alpha_n <= hi * 1.02, "interval does not reach alpha_1");
    v << "alpha_1=" << sci(cert.alpha_n) << "; samples in [" << sci(lo) << ", " << sci(hi) << "]; threshold "
      << sci(br.threshold) << "; ";
    for (const auto& e : br.ends) {
        const std::string side = e.direction < 0 ? "lower" : "upper";
        if (!e.closed) {
            v.check(false, side + " end: Im c does not reach the noise floor (last Im c = " + sci(e.last_imag) +
                               " at alpha = " + sci(e.alpha) + "): " + e.reason);
            continue;
        }
        double best = 1e300;
        for (double l : negs) best = std::min(best, std::abs(e.alpha - std::sqrt(-l)) / std::sqrt(-l));
        v.check(best < 0.02, side + " endpoint " + sci(e.alpha) + " not within 2% of any sqrt(-lambda)");
        v << side << " endpoint " << sci(e.alpha) << " (closest sqrt(-lambda) rel diff " << sci(best) << "); ";
    }
    return v;
}

Verdict criterion5() {
    Verdict v;
    double worst = -1e300;
    for (double a : {0.5, 1.0, 2.0})
        for (double R : {1e3, 1e4, 1e5}) {
            auto s = solve_os(OSProblem{ShearProfile::linear(), a, R, 0});
            // Re lambda = alpha Im c for lambda = -i alpha c
            const double re = a * s.max_imag_all;
            v.check(re < 0.0, "alpha=" + sci(a) + " R=" + sci(R) + " max Re lambda=" + sci(re));
            worst = std::max(worst, re);
        }
    double off = 0.0, floor = 0.0;
    for (double a : {0.5, 1.0, 2.0}) {
        auto r = solve_rayleigh(ShearProfile::linear(), a, {0.5, 0.1});
        v.check(!r.mode, "linear shear reported an unstable Rayleigh mode");
        floor = std::max(floor, r.threshold);
        for (Eigen::Index i = 0; i < r.spectrum.size(); ++i) {
            cplx c = r.spectrum[i];
            double d = std::max({std::abs(c.imag()), -c.real(), c.real() - 1.0, 0.0});
            off = std::max(off, d);
        }
        v.check(off <= r.threshold, "inviscid spectrum leaves [0,1] by " + sci(off));
    }
    v << "9 OS cases; max Re lambda = " << sci(worst) << "; inviscid distance from [0,1] = " << sci(off)
      << " (threshold " << sci(floor) << ")";
    return v;
}

Verdict criterion6() {
    Verdict v;
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    const double a0 = 0.5 * cert.alpha_n;
    auto rs = solve_rayleigh(U, a0, {0.5, 0.1});
    v.check(rs.mode.has_value(), "no inviscid mode at alpha0");
    if (!rs.mode) return v;
    auto t = track_inviscid_limit(U, a0, rs.mode->c, {1e4, 1e5, 1e6, 1e7});
    v.check(t.path.size() == 4, "track lost the mode (" + std::to_string(t.path.size()) + " of 4 points)");
    for (std::size_t i = 0; i < t.path.size(); ++i) {
        const auto& p = t.path[i];
        if (p.R >= 1e5) v.check(p.c.imag() > 0.0, "Im c <= 0 at R=" + sci(p.R));
        if (i) v.check(p.defect < t.path[i - 1].defect, "defect not decreasing at R=" + sci(p.R));
        v << "R=" << sci(p.R) << " Im c=" << sci(p.c.imag()) << " defect=" << sci(p.defect) << "; ";
    }
    v.check(t.slope > -1.0 && t.slope < -0.25, "slope " + sci(t.slope) + " outside (-1, -0.25)");
    v << "alpha0=" << sci(a0) << " slope=" << sci(t.slope);
    return v;
}

Verdict criterion7() {
    Verdict v;
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    const double rec = reconstruction_residual(build_f(U));
    v.check(rec < 1e-6, "f-reconstruction residual " + sci(rec));

    auto lead = leading_order_wave(U, cert, 1e-3);
    auto cps = critical_points(lead);
    int saddles = 0, centers = 0;
    for (const auto& c : cps) {
        if (c.classification == CriticalKind::saddle) {
            ++saddles;
            v.check(std::min(c.xi, 2 * pi - c.xi) < 1e-6 && std::abs(c.y - 0.5) < 1e-6, "saddle away from (0, 1/2)");
        } else if (c.classification == CriticalKind::center) {
            ++centers;
            v.check(std::abs(c.xi - pi) < 1e-6 && std::abs(c.y - 0.5) < 1e-6, "center away from (pi, 1/2)");
        }
    }
    v.check(saddles == 1 && centers == 1 && cps.size() == 2,
            "critical points: " + std::to_string(saddles) + " saddles, " + std::to_string(centers) + " centers, " +
                std::to_string(cps.size()) + " total");

    auto defect = [&](double b) { return wave_distance(newton_branch(U, cert, b), leading_order_wave(U, cert, b)); };
    const double d1 = defect(1e-3), d2 = defect(5e-4);
    v.check(d1 / d2 >= 1.8, "defect ratio " + sci(d1 / d2));

    double prev = 1e300;
    std::ostringstream devs;
    for (double b : {1e-2, 1e-3, 1e-4}) {
        auto w = newton_branch(U, cert, b);
        double dev = std::abs(w.alpha_sq - w.alpha_n_sq);
        v.check(dev < prev, "|alpha^2 - alpha_n^2| not decreasing at beta=" + sci(b));
        prev = dev;
        devs << sci(dev) << " ";
    }
    v << "residual " << sci(rec) << "; " << saddles << " saddle + " << centers << " center; defect ratio "
      << sci(d1 / d2) << "; |alpha^2 - alpha_n^2| over beta=1e-2,1e-3,1e-4: " << devs.str();
    return v;
}

Verdict criterion8() {
    Verdict v;
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    const double a0 = 0.5 * cert.alpha_n;
    auto rs = solve_rayleigh(U, a0, {0.5, 0.1});
    v.check(rs.mode && rs.mode->resolved, "2D mode not resolved");
    if (!rs.mode) return v;
    const double tol = RayleighOptions{}.cauchy_tol;
    auto g = [](double y, double z) { return std::sin(pi * y) * std::cos(2 * pi * z); };
    auto t = persistence_sweep(U, g, {0.0, 1e-3, 1e-2}, a0, StripGrid{128, 16, 1.0});
    v << "grid (" << t.grid.Ny << "," << t.grid.Nz << ") map mu=" << sci(t.grid.map_strength) << "; ";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string tag = "eps=" + sci(r.eps);
        v.check(!r.lost, tag + " lost the instability");
        if (r.lost) continue;
        v.check(r.c.imag() > 0.0, tag + " Im c <= 0");
        v.check(r.max_invariant < 1e-8, tag + " invariant " + sci(r.max_invariant));
        v << tag << " c=" << sci(r.c.real()) << "+" << sci(r.c.imag()) << "i defect=" << sci(r.defect)
          << " inv=" << sci(r.max_invariant) << " [" << r.method << "]; ";
        if (r.eps == 0.0) {
            const double d3 = t.modes[i]->refinement_delta;
            v.check(std::abs(r.c - rs.mode->c) < tol, "eps=0 differs from c0 by " + sci(std::abs(r.c - rs.mode->c)));
            v.check(std::isfinite(d3) && d3 < tol, "eps=0 two-grid delta " + sci(d3));
        }
    }
    if (!t.rows[1].lost && !t.rows[2].lost)
        v.check(t.rows[1].defect < t.rows[2].defect, "defect(1e-3) >= defect(1e-2)");
    return v;
}

Verdict criterion9() {
    Verdict v;
    Strip s({48, 8});
    std::mt19937 rng(9091);
    std::normal_distribution<double> nd;
    auto field = [&](const std::function<cplx(double, double)>& f) {
        MatrixXcd m(s.Nz(), s.n1());
        for (int i = 0; i < s.Nz(); ++i)
            for (int j = 0; j < s.n1(); ++j) m(i, j) = f(s.y()[j], s.z()[i]);
        return m;
    };
    double e_div = 0, e_curl = 0, e_field = 0;
    for (int trial = 0; trial < 20; ++trial) {
        // v vanishes on the walls; w has zero z-mean on the walls, so both circulations vanish
        cplx a[3][3], b[4][3], c0 = {nd(rng), nd(rng)};
        for (auto& r : a)
            for (auto& x : r) x = {nd(rng), nd(rng)};
        for (auto& r : b)
            for (auto& x : r) x = {nd(rng), nd(rng)};
        auto V = field([&](double y, double z) {
            cplx t = 0.0;
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m) t += a[k][m] * std::cos(m * pi * y) * std::polar(1.0, 2 * pi * (k - 1) * z);
            return std::sin(pi * y) * t;
        });
        auto W = field([&](double y, double z) {
            cplx t = c0 * y * (1 - y);
            const int ks[4] = {-2, -1, 1, 2};
            for (int q = 0; q < 4; ++q)
                for (int m = 0; m < 3; ++m) t += b[q][m] * std::cos(m * pi * y) * std::polar(1.0, 2 * pi * ks[q] * z);
            return t;
        });
        MatrixXcd f1 = divergence(s, V, W), f2 = curl(s, V, W);
        auto r = div_curl_reconstruct(s, f1, f2);
        const double scale = std::max(V.cwiseAbs().maxCoeff(), W.cwiseAbs().maxCoeff());
        e_div = std::max(e_div, (divergence(s, r.v, r.w) - f1).cwiseAbs().maxCoeff());
        e_curl = std::max(e_curl, (curl(s, r.v, r.w) - f2).cwiseAbs().maxCoeff());
        e_field = std::max(e_field, std::max((r.v - V).cwiseAbs().maxCoeff(), (r.w - W).cwiseAbs().maxCoeff()) / scale);
    }
    v.check(e_div < 1e-8, "div error " + sci(e_div));
    v.check(e_curl < 1e-8, "curl error " + sci(e_curl));
    v.check(e_field < 1e-6, "field error " + sci(e_field));
    v << "20 fields on (48,8): max div error " << sci(e_div) << ", curl error " << sci(e_curl)
      << ", relative field error " << sci(e_field);
    return v;
}

// reference: Chebyshev collocation in y, Crank-Nicolson in t, written from scratch here
Verdict criterion10() {
    Verdict v;
    const int N = 64;
    const double eps = 1e-4, T = 1.0, dt = 1e-3, A = 0.06;
    Eigen::VectorXd x(N + 1);
    for (int j = 0; j <= N; ++j) x[j] = std::cos(pi * j / N);
    Eigen::MatrixXd D(N + 1, N + 1);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) {
            double ci = (i == 0 || i == N) ? 2.0 : 1.0, cj = (j == 0 || j == N) ? 2.0 : 1.0;
            D(i, j) = i == j ? 0.0 : ci / cj * ((i + j) % 2 ? -1.0 : 1.0) / (x[i] - x[j]);
        }
    // negative-sum trick for the diagonal
    for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
    // y = (1 - x)/2, d/dy = -2 d/dx
    Eigen::MatrixXd Dy = -2.0 * D, D2 = Dy * Dy;
    Eigen::VectorXd y = (1.0 - x.array()) / 2.0;
    Eigen::MatrixXd L = eps * D2.block(1, 1, N - 1, N - 1);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N - 1, N - 1);
    Eigen::PartialPivLU<Eigen::MatrixXd> lhs(I - 0.5 * dt * L);
    Eigen::MatrixXd rhs = I + 0.5 * dt * L;
    // u = y + q with q = 0 on the walls; y is a steady solution
    Eigen::VectorXd q(N - 1);
    for (int j = 1; j < N; ++j) q[j - 1] = A * std::sin(4 * pi * y[j]);
    const int steps = static_cast<int>(std::lround(T / dt));
    for (int k = 0; k < steps; ++k) q = lhs.solve(rhs * q);
    auto drifted = drift(ShearProfile::oscillatory(1, A), DriftParams{eps, T});
    double err = 0.0;
    for (int j = 1; j < N; ++j) err = std::max(err, std::abs(y[j] + q[j - 1] - drifted.eval(y[j])));
    v.check(err < 1e-10, "max error " + sci(err));
    v << "N=" << N << " dt=" << sci(dt) << " steps=" << steps << "; max |drift - reference| = " << sci(err);
    return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
    {"Sturm-Liouville certificate and bound vs FD oracle", criterion1},
    {"spectral gap lambda2 >= -1e-8 |lambda1|", criterion2},
    {"neutral-mode anchor residual", criterion3},
    {"inviscid unstable branch endpoints", criterion4},
    {"Couette control (viscous and inviscid)", criterion5},
    {"viscous instability and inviscid limit", criterion6},
    {"cat's-eye bifurcation", criterion7},
    {"3D reduction and persistence at (128,16)", criterion8},
    {"div-curl round trip", criterion9},
    {"drift vs spectral heat step", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<int>(i) + 1 != only) continue;
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v << "exception: " << e.what();
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %zu: %s  %s (%.1f s) | %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), sec,
                    v.detail.str().c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed ? 1 : 0;
}
