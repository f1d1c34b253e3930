#pragma once

// Dirichlet problem for L = -d^2/dy^2 + Q(y), Q = U''/(U - U(y_i)), and the instability certificate.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"
#include "shearspec/linalg.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/quadrature.hpp"

namespace shearspec {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SingularPoint {
    double y;
    double limit;  // U'''(y)/U'(y)
};

// Q sampled on a Chebyshev grid, plus the means to resample it on any other grid.
struct SLProblem {
    int N = 0;
    VectorXd grid;
    VectorXd Q;
    std::vector<SingularPoint> singular_points;
    std::function<double(double)> potential;
    double y_i = 0.5;   // inflection point (when built from a profile)
    double U_i = 0.5;   // inflection value
    int index = 1;      // oscillation index of the source profile

    double q(double y) const { return potential(y); }
};

inline int default_grid_size(const ShearProfile& p) { return std::max(256, 64 * p.index()); }

inline SLProblem make_sl_problem(std::function<double(double)> potential, int N, int index = 1) {
    require(N >= 8, "SL grid too small");
    SLProblem prob;
    prob.N = N;
    prob.grid = cheb::nodes(N);
    prob.potential = std::move(potential);
    prob.index = index;
    prob.Q.resize(N + 1);
    for (int j = 0; j <= N; ++j) prob.Q[j] = prob.potential(prob.grid[j]);
    return prob;
}

// same potential, different grid
inline SLProblem resample(const SLProblem& prob, int N) {
    SLProblem r = make_sl_problem(prob.potential, N, prob.index);
    r.singular_points = prob.singular_points;
    r.y_i = prob.y_i;
    r.U_i = prob.U_i;
    return r;
}

inline SLProblem build_Q(const ShearProfile& p, double y_i, int N = 0) {
    if (N <= 0) N = default_grid_size(p);
    if (!(y_i > 0.0 && y_i < 1.0)) throw DomainError("inflection point must lie in (0,1)");
    if (inflection_points(p).empty())
        throw SingularPotentialError("profile has no inflection point (U'' does not change sign)");
    // U''(y_i) must vanish relative to the size of U''
    double scale = 0.0;
    for (int j = 0; j <= 256; ++j) scale = std::max(scale, std::abs(p.derivative(j / 256.0, 2)));
    if (std::abs(p.derivative(y_i, 2)) > 1e-8 * std::max(scale, 1e-300))
        throw SingularPotentialError("y_i = " + std::to_string(y_i) + " is not an inflection point");
    if (min_slope(p) <= 0.0)
        throw SingularPotentialError("U(y) - U(y_i) vanishes away from y_i (profile not monotone)");

    const double Ui = p.derivative(y_i, 0);
    double d[7];
    for (int k = 1; k <= 6; ++k) d[k] = p.derivative(y_i, k);
    const double limit = d[3] / d[1];
    // Taylor zone: |k h| < 1e-3 with k the top wavenumber
    const double kmax = std::max(1.0, p.max_wavenumber() * std::numbers::pi);
    const double hT = 1e-3 / kmax;
    auto Q = [p, y_i, Ui, d, limit, hT](double y) {
        double h = y - y_i;
        if (h == 0.0) return limit;
        if (std::abs(h) < hT) {
            double num = d[3] + d[4] * h / 2.0 + d[5] * h * h / 6.0 + d[6] * h * h * h / 24.0;
            double den = d[1] + d[3] * h * h / 6.0 + d[4] * h * h * h / 24.0 + d[5] * h * h * h * h / 120.0;
            return num / den;
        }
        return p.derivative(y, 2) / (p.derivative(y, 0) - Ui);
    };
    SLProblem prob = make_sl_problem(Q, N, p.index());
    prob.singular_points.push_back({y_i, limit});
    prob.y_i = y_i;
    prob.U_i = Ui;
    return prob;
}

struct SLSpectrum {
    std::vector<double> eigenvalues;
    std::vector<VectorXd> eigenfunctions;  // on prob.grid, zero at both ends, L2-normalised
    std::vector<int> zero_counts;
    std::vector<double> refinement_deltas;  // |lambda_N - lambda_2N|
    int N = 0;
};

struct SLOptions {
    bool check_refinement = true;
    double rel_tol = 1e-8;
};

inline int count_sign_changes(const VectorXd& phi) {
    double m = phi.cwiseAbs().maxCoeff();
    int count = 0, last = 0;
    for (Eigen::Index j = 1; j + 1 < phi.size(); ++j) {
        if (std::abs(phi[j]) < 1e-8 * m) continue;
        int s = phi[j] > 0 ? 1 : -1;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

namespace detail {

inline MatrixXd sl_matrix(const SLProblem& prob) {
    const int N = prob.N;
    MatrixXd D = cheb::diff_matrix(N);
    MatrixXd D2 = D * D;
    MatrixXd L = -D2.block(1, 1, N - 1, N - 1);
    for (int j = 1; j < N; ++j) L(j - 1, j - 1) += prob.Q[j];
    return L;
}

inline std::vector<double> sorted_real(const linalg::EigResult& r, std::vector<int>* order = nullptr) {
    std::vector<int> idx(r.values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return r.values[a].real() < r.values[b].real(); });
    std::vector<double> v;
    for (int i : idx) v.push_back(r.values[i].real());
    if (order) *order = idx;
    return v;
}

}  // namespace detail

// eigenvalues only, no refinement check
inline std::vector<double> sl_eigenvalues(const SLProblem& prob, int k) {
    std::vector<double> lam = detail::sorted_real(linalg::eig(detail::sl_matrix(prob), false));
    lam.resize(std::min<std::size_t>(lam.size(), static_cast<std::size_t>(k)));
    return lam;
}

inline SLSpectrum solve_sl(const SLProblem& prob, int k, const SLOptions& opt = {}) {
    require(k >= 1 && k < prob.N - 1, "solve_sl: need 1 <= k < N-1");
    const int N = prob.N;
    linalg::EigResult r = linalg::eig(detail::sl_matrix(prob), true);
    std::vector<int> order;
    std::vector<double> lam = detail::sorted_real(r, &order);
    VectorXd w = cheb::cc_weights(N);

    SLSpectrum s;
    s.N = N;
    for (int m = 0; m < k; ++m) {
        int idx = order[m];
        double im = std::abs(r.values[idx].imag());
        if (im > 1e-8 * std::max(1.0, std::abs(lam[m])))
            throw ConvergenceError("collocation SL eigenvalue is not real: Im = " + std::to_string(im));
        VectorXd phi = VectorXd::Zero(N + 1);
        phi.segment(1, N - 1) = r.vectors.col(idx).real();
        if (phi.cwiseAbs().maxCoeff() == 0.0) phi.segment(1, N - 1) = r.vectors.col(idx).imag();
        phi /= std::sqrt((w.array() * phi.array().square()).sum());
        // sign: first significant value from the left is positive
        double m0 = phi.cwiseAbs().maxCoeff();
        for (int j = 1; j < N; ++j) {
            if (std::abs(phi[j]) > 1e-6 * m0) {
                if (phi[j] < 0) phi = -phi;
                break;
            }
        }
        s.eigenvalues.push_back(lam[m]);
        s.eigenfunctions.push_back(phi);
        s.zero_counts.push_back(count_sign_changes(phi));
    }
    if (opt.check_refinement) {
        SLProblem fine = resample(prob, 2 * N);
        std::vector<double> lf = detail::sorted_real(linalg::eig(detail::sl_matrix(fine), false));
        for (int m = 0; m < k; ++m) {
            double d = std::abs(lf[m] - s.eigenvalues[m]);
            s.refinement_deltas.push_back(d);
            if (d > opt.rel_tol * std::max(1.0, std::abs(s.eigenvalues[m])))
                throw ConvergenceError("SL eigenvalue " + std::to_string(m + 1) + " not converged: N=" +
                                       std::to_string(N) + " gives " + std::to_string(s.eigenvalues[m]) + ", N=" +
                                       std::to_string(2 * N) + " gives " + std::to_string(lf[m]));
        }
    }
    return s;
}

// Rayleigh quotient of a grid function on prob.grid (spectral derivative, Clenshaw-Curtis)
inline double rayleigh_quotient(const SLProblem& prob, const VectorXd& phi) {
    require(phi.size() == prob.N + 1, "rayleigh_quotient: grid function has the wrong size");
    double m = phi.cwiseAbs().maxCoeff();
    if (m == 0.0) throw DomainError("rayleigh_quotient: zero denominator");
    require(std::abs(phi[0]) <= 1e-12 * m && std::abs(phi[prob.N]) <= 1e-12 * m,
            "rayleigh_quotient: phi must vanish at both ends");
    VectorXd w = cheb::cc_weights(prob.N);
    VectorXd dphi = cheb::diff_matrix(prob.N) * phi;
    double num = (w.array() * (dphi.array().square() + prob.Q.array() * phi.array().square())).sum();
    double den = (w.array() * phi.array().square()).sum();
    return num / den;
}

// Piecewise-linear function given by its breakpoints.
struct PiecewiseLinear {
    std::vector<double> knots;
    std::vector<double> values;

    double operator()(double y) const {
        if (y <= knots.front()) return values.front();
        if (y >= knots.back()) return values.back();
        auto it = std::upper_bound(knots.begin(), knots.end(), y);
        std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
        double t = (y - knots[i]) / (knots[i + 1] - knots[i]);
        return values[i] + t * (values[i + 1] - values[i]);
    }
};

// Quotient of a piecewise-linear function: Gauss-Legendre on every smooth piece.
inline double rayleigh_quotient(const SLProblem& prob, const PiecewiseLinear& phi) {
    require(phi.knots.size() >= 2 && phi.knots.size() == phi.values.size(), "bad piecewise-linear function");
    require(phi.knots.front() == 0.0 && phi.knots.back() == 1.0, "piecewise-linear function must span [0,1]");
    require(phi.values.front() == 0.0 && phi.values.back() == 0.0, "rayleigh_quotient: phi must vanish at both ends");
    const double hmax = 1.0 / (32.0 * std::max(1, prob.index));
    auto [gx, gw] = quad::gauss_legendre(20, 0.0, 1.0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < phi.knots.size(); ++i) {
        double a = phi.knots[i], b = phi.knots[i + 1];
        if (b <= a) continue;
        double slope = (phi.values[i + 1] - phi.values[i]) / (b - a);
        num += slope * slope * (b - a);
        int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
        for (int q = 0; q < pieces; ++q) {
            double pa = a + (b - a) * q / pieces, pb = a + (b - a) * (q + 1) / pieces;
            for (int g = 0; g < gx.size(); ++g) {
                double y = pa + (pb - pa) * gx[g];
                double v = phi.values[i] + slope * (y - a);
                double wt = (pb - pa) * gw[g];
                num += wt * prob.q(y) * v * v;
                den += wt * v * v;
            }
        }
    }
    if (den == 0.0) throw DomainError("rayleigh_quotient: zero denominator");
    return num / den;
}

// Plateau of height 1/(4n) on |y-1/2| <= 1/(8n), linear to zero at |y-1/2| = 3/(8n).
inline PiecewiseLinear plateau_test_function(int n) {
    require(n >= 1, "plateau_test_function: n >= 1");
    const double h = 1.0 / (4.0 * n), a = 1.0 / (8.0 * n), b = 3.0 / (8.0 * n);
    PiecewiseLinear f;
    f.knots = {0.0, 0.5 - b, 0.5 - a, 0.5 + a, 0.5 + b, 1.0};
    f.values = {0.0, 0.0, h, h, 0.0, 0.0};
    return f;
}

// -(6/5)(4n)^2 [pi(1-delta)/(2-delta) - 1], negative for 0 < delta < (pi-2)/(pi-1)
inline double lambda1_bound(int n, double delta) {
    const double pi = std::numbers::pi;
    const double dmax = (pi - 2.0) / (pi - 1.0);
    if (!(delta > 0.0 && delta < dmax))
        throw BoundError("bound is not negative for delta = " + std::to_string(delta) + " (valid range (0, " +
                         std::to_string(dmax) + "))");
    double k = 4.0 * n;
    return -1.2 * k * k * (pi * (1.0 - delta) / (2.0 - delta) - 1.0);
}

struct Witness {
    double y_i = 0.0;
    double U_i = 0.0;
    std::vector<double> eigenvalues;  // lowest few eigenvalues of L_i
    double lambda1() const { return eigenvalues.front(); }
};

struct InstabilityCertificate {
    std::optional<ShearProfile> profile;
    bool unstable = false;
    double witness_inflection = 0.0;
    double U_i = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double alpha_n = 0.0;  // sqrt(-lambda1) when unstable
    VectorXd phi_n;        // positive, L2-normalised, on `grid`
    VectorXd grid;
    int N = 0;
    double refinement_delta = 0.0;
    std::vector<Witness> witnesses;  // every inflection point, sorted by lambda1

    // -alpha^2 for every negative eigenvalue of every L_i
    std::vector<double> negative_eigenvalues() const {
        std::vector<double> v;
        for (const auto& w : witnesses)
            for (double l : w.eigenvalues)
                if (l < 0.0) v.push_back(l);
        std::sort(v.begin(), v.end());
        return v;
    }
};

struct CertifyOptions {
    int N = 0;              // 0: default sizing rule
    int modes_per_point = 3;
};

inline InstabilityCertificate certify_instability(const ShearProfile& p, const CertifyOptions& opt = {}) {
    InstabilityCertificate cert;
    cert.profile = p;
    std::vector<double> pts = inflection_points(p);
    if (pts.empty()) return cert;
    if (min_slope(p) <= 0.0) throw DomainError("profile is not monotone; the inflection-point criterion does not apply");
    const int N = opt.N > 0 ? opt.N : default_grid_size(p);
    for (double y : pts) {
        SLProblem prob = build_Q(p, y, N);
        cert.witnesses.push_back({y, prob.U_i, sl_eigenvalues(prob, opt.modes_per_point)});
    }
    std::stable_sort(cert.witnesses.begin(), cert.witnesses.end(),
                     [](const Witness& a, const Witness& b) { return a.lambda1() < b.lambda1(); });
    const Witness& best = cert.witnesses.front();
    cert.witness_inflection = best.y_i;
    cert.U_i = best.U_i;
    cert.N = N;
    // refined solve on the witness
    SLProblem prob = build_Q(p, best.y_i, N);
    SLSpectrum s = solve_sl(prob, 2);
    cert.lambda1 = s.eigenvalues[0];
    cert.lambda2 = s.eigenvalues[1];
    cert.refinement_delta = s.refinement_deltas[0];
    cert.grid = prob.grid;
    cert.phi_n = s.eigenfunctions[0];
    cert.unstable = cert.lambda1 < 0.0;
    if (cert.unstable) cert.alpha_n = std::sqrt(-cert.lambda1);
    return cert;
}

struct GrowthFit {
    std::vector<int> n;
    std::vector<double> alpha_n;
    double c0 = 0.0;  // min alpha_n / n
    double C0 = 0.0;  // max alpha_n / n
};

// alpha_n / n across n at fixed amplitude
inline GrowthFit fit_linear_growth(const std::vector<int>& n_list, double A) {
    GrowthFit f;
    f.c0 = std::numeric_limits<double>::infinity();
    f.C0 = 0.0;
    for (int n : n_list) {
        InstabilityCertificate c = certify_instability(ShearProfile::oscillatory(n, A));
        if (!c.unstable) throw NotUnstableError("U_n not certified unstable for n = " + std::to_string(n));
        f.n.push_back(n);
        f.alpha_n.push_back(c.alpha_n);
        f.c0 = std::min(f.c0, c.alpha_n / n);
        f.C0 = std::max(f.C0, c.alpha_n / n);
    }
    return f;
}

}  // namespace shearspec
