#pragma once

// Orr-Sommerfeld problem
//   (U - c)(phi'' - alpha^2 phi) - U'' phi = (1/(i alpha R)) (D^2 - alpha^2)^2 phi,
//   phi = phi' = 0 at y = 0, 1,
// by Chebyshev collocation with the clamped conditions imposed as bordering rows.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"
#include "shearspec/linalg.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/rayleigh.hpp"
#include "shearspec/sturm.hpp"

namespace shearspec {

struct OSProblem {
    ShearProfile profile = ShearProfile::linear();
    double alpha = 1.0;
    double R = 1e4;
    int N = 0;  // 0: recommended_os_grid
};

struct OSOptions {
    double agree_tol = 1e-6;    // |c_N - c_1.5N|
    double tail_tol = 1e-6;     // Chebyshev tail of the eigenfunction
    double abs_floor = 1e-8;
    double max_abs_c = 1e3;     // larger finite eigenvalues are treated as spurious
    bool keep_discarded = true;
};

struct DiscardedMode {
    cplx c;
    double refinement_delta = 0.0;
    double tail = 0.0;
};

struct OSSpectrum {
    std::vector<EigenMode> modes;  // retained, Im c descending then Re c ascending
    std::vector<DiscardedMode> discarded;
    int most_unstable = -1;
    double noise_floor = 0.0;
    double threshold = 0.0;
    double max_imag_all = -std::numeric_limits<double>::infinity();  // over every finite eigenvalue
    int N = 0, N_fine = 0;
    std::vector<std::string> warnings;
};

// the wall layer has thickness (alpha R)^(-1/2); Chebyshev spacing at the wall is ~ pi^2/(4 N^2)
inline int min_os_grid_for_layer(double alpha, double R) {
    const double pi = std::numbers::pi;
    return static_cast<int>(std::ceil(std::sqrt(pi * pi * std::sqrt(alpha * R))));
}

inline int recommended_os_grid(const ShearProfile& p, double alpha, double R) {
    int n = std::max({96, 64 * p.index(), static_cast<int>(std::ceil(1.25 * min_os_grid_for_layer(alpha, R)))});
    return n + (n % 2);
}

namespace detail {

struct OSPencil {
    MatrixXcd A, B;
};

inline OSPencil os_pencil(const ShearProfile& p, double alpha, double R, int N) {
    VectorXd y = cheb::nodes(N);
    MatrixXd D = cheb::diff_matrix(N);
    MatrixXd D2 = D * D;
    MatrixXd I = MatrixXd::Identity(N + 1, N + 1);
    MatrixXd L = D2 - alpha * alpha * I;
    MatrixXd L2 = L * L;
    VectorXd U = sample(p, y, 0), U2 = sample(p, y, 2);
    const cplx visc = 1.0 / (cplx(0.0, alpha) * R);
    OSPencil P;
    P.A = (U.asDiagonal() * L).cast<cplx>() - visc * L2.cast<cplx>();
    P.A.diagonal() -= U2.cast<cplx>();
    P.B = L.cast<cplx>();
    // bordering rows: phi(0), phi'(0), phi'(1), phi(1)
    for (int r : {0, 1, N - 1, N}) {
        P.A.row(r).setZero();
        P.B.row(r).setZero();
    }
    P.A(0, 0) = 1.0;
    P.A(N, N) = 1.0;
    P.A.row(1) = D.row(0).cast<cplx>();
    P.A.row(N - 1) = D.row(N).cast<cplx>();
    return P;
}

inline std::vector<cplx> finite_eigs(const linalg::GenEigResult& r, double max_abs, std::vector<int>* idx = nullptr) {
    std::vector<cplx> v;
    for (Eigen::Index i = 0; i < r.alpha.size(); ++i) {
        if (std::abs(r.beta[i]) <= 1e-13 * std::abs(r.alpha[i])) continue;
        cplx c = r.alpha[i] / r.beta[i];
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > max_abs) continue;
        v.push_back(c);
        if (idx) idx->push_back(static_cast<int>(i));
    }
    return v;
}

inline void sort_modes(std::vector<EigenMode>& m) {
    std::stable_sort(m.begin(), m.end(), [](const EigenMode& a, const EigenMode& b) {
        if (a.c.imag() != b.c.imag()) return a.c.imag() > b.c.imag();
        return a.c.real() < b.c.real();
    });
}

}  // namespace detail

inline OSSpectrum solve_os(const OSProblem& prob, const OSOptions& opt = {}) {
    require(prob.alpha > 0.0 && prob.R > 0.0, "solve_os: alpha and R must be positive");
    const int N = prob.N > 0 ? prob.N : recommended_os_grid(prob.profile, prob.alpha, prob.R);
    require(N >= 64, "solve_os: N >= 64 required");
    int N2 = static_cast<int>(std::lround(1.5 * N));
    N2 += N2 % 2;

    OSSpectrum out;
    out.N = N;
    out.N_fine = N2;
    if (N < 64 * prob.profile.index())
        out.warnings.push_back("N=" + std::to_string(N) + " below 64 n for the profile oscillation");
    if (N < min_os_grid_for_layer(prob.alpha, prob.R))
        out.warnings.push_back("N=" + std::to_string(N) + " does not resolve the wall layer (alpha R)^(-1/2); need N >= " +
                               std::to_string(min_os_grid_for_layer(prob.alpha, prob.R)));

    auto P = detail::os_pencil(prob.profile, prob.alpha, prob.R, N);
    auto r = linalg::eig(P.A, P.B, true);
    std::vector<int> idx;
    std::vector<cplx> cs = detail::finite_eigs(r, opt.max_abs_c, &idx);
    auto P2 = detail::os_pencil(prob.profile, prob.alpha, prob.R, N2);
    std::vector<cplx> cf = detail::finite_eigs(linalg::eig(P2.A, P2.B, false), opt.max_abs_c);

    VectorXd y = cheb::nodes(N);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        out.max_imag_all = std::max(out.max_imag_all, cs[i].imag());
        double d = std::numeric_limits<double>::infinity();
        for (const cplx& f : cf) d = std::min(d, std::abs(f - cs[i]));
        VectorXcd phi = r.vectors.col(idx[i]);
        detail::normalise_max(phi);
        double tail = cheb::tail_ratio(phi);
        if (d < opt.agree_tol && tail < opt.tail_tol) {
            EigenMode m;
            m.kind = ModeKind::orr_sommerfeld;
            m.alpha = prob.alpha;
            m.R = prob.R;
            m.N = N;
            m.grid = y;
            m.c = cs[i];
            m.phi = phi;
            m.residual = detail::pencil_residual(P.A, P.B, m.c, phi);
            m.refinement_delta = d;
            m.resolved = true;
            out.modes.push_back(std::move(m));
        } else if (opt.keep_discarded) {
            out.discarded.push_back({cs[i], d, tail});
        }
    }
    detail::sort_modes(out.modes);
    for (const auto& m : out.modes) out.noise_floor = std::max(out.noise_floor, m.refinement_delta);
    out.threshold = std::max(10.0 * out.noise_floor, opt.abs_floor);
    if (!out.modes.empty()) out.most_unstable = 0;
    return out;
}

// Newton polish of one OS eigenpair on its own grid
inline void polish_os_mode(EigenMode& m, const ShearProfile& p) {
    auto P = detail::os_pencil(p, m.alpha, m.R, m.N);
    VectorXcd phi = m.phi;
    cplx c = m.c;
    const Eigen::Index n = phi.size();
    Eigen::Index k;
    phi.cwiseAbs().maxCoeff(&k);
    phi /= phi[k];
    for (int it = 0; it < 6; ++it) {
        if (detail::pencil_residual(P.A, P.B, c, phi) < 1e-15) break;
        MatrixXcd J = MatrixXcd::Zero(n + 1, n + 1);
        J.topLeftCorner(n, n) = P.A - c * P.B;
        J.topRightCorner(n, 1) = -(P.B * phi);
        J(n, k) = 1.0;
        VectorXcd F(n + 1);
        F.head(n) = P.A * phi - c * (P.B * phi);
        F[n] = phi[k] - 1.0;
        VectorXcd d = J.partialPivLu().solve(F);
        phi -= d.head(n);
        c -= d[n];
    }
    m.c = c;
    m.phi = phi;
    detail::normalise_max(m.phi);
    m.residual = detail::pencil_residual(P.A, P.B, m.c, phi);
}

struct TrackPoint {
    double R = 0.0;
    cplx c;
    int N = 0;
    double refinement_delta = 0.0;
    double defect = 0.0;  // |c*(R) - c0|
};

struct LimitTrack {
    std::vector<double> schedule;
    std::vector<TrackPoint> path;
    cplx inviscid_target;
    bool truncated = false;
    std::vector<std::string> diagnostics;
    double slope = std::numeric_limits<double>::quiet_NaN();  // least-squares d log(defect) / d log R
    bool defect_decreased = false;                            // last defect < first defect
    std::vector<EigenMode> modes;                             // tracked eigenfunctions, one per path point
};

struct TrackOptions {
    OSOptions os;
    int N_override = 0;   // fixed N for every R (0: recommended grid)
};

inline LimitTrack track_inviscid_limit(const ShearProfile& p, double alpha0, cplx c0, const std::vector<double>& schedule,
                                       const TrackOptions& opt = {}) {
    require(!schedule.empty(), "track_inviscid_limit: empty schedule");
    require(std::is_sorted(schedule.begin(), schedule.end()), "track_inviscid_limit: schedule must be ascending");
    require(c0.imag() > 0.0, "track_inviscid_limit: c0 must be an unstable Rayleigh eigenvalue");
    LimitTrack t;
    t.schedule = schedule;
    t.inviscid_target = c0;
    cplx seed = c0;
    for (double R : schedule) {
        OSProblem prob{p, alpha0, R, opt.N_override};
        OSSpectrum s = solve_os(prob, opt.os);
        int best = -1;
        for (std::size_t i = 0; i < s.modes.size(); ++i) {
            if (s.modes[i].c.imag() <= s.threshold) continue;
            if (best < 0 || std::abs(s.modes[i].c - seed) < std::abs(s.modes[best].c - seed)) best = static_cast<int>(i);
        }
        for (const auto& w : s.warnings) t.diagnostics.push_back("R=" + std::to_string(R) + ": " + w);
        if (best < 0) {
            t.diagnostics.push_back("R=" + std::to_string(R) + ": no retained unstable mode");
            if (!t.path.empty()) {
                t.truncated = true;
                break;
            }
            continue;
        }
        EigenMode m = s.modes[best];
        polish_os_mode(m, p);
        seed = m.c;
        t.path.push_back({R, m.c, m.N, m.refinement_delta, std::abs(m.c - c0)});
        t.modes.push_back(std::move(m));
    }
    if (t.path.size() >= 2) {
        t.defect_decreased = t.path.back().defect < t.path.front().defect;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(t.path.size());
        for (const auto& q : t.path) {
            double x = std::log(q.R), yv = std::log(q.defect);
            sx += x;
            sy += yv;
            sxx += x * x;
            sxy += x * yv;
        }
        t.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return t;
}

// ||phi||_{H^s}^2 = sum_{k<=s} ||D^k phi||^2 (integer s)
inline std::vector<std::pair<double, double>> boundary_layer_diagnostic(const EigenMode& mode,
                                                                        const std::vector<double>& s_list) {
    std::vector<std::pair<double, double>> out;
    const int N = static_cast<int>(mode.phi.size()) - 1;
    MatrixXd D = cheb::diff_matrix(N);
    VectorXd w = cheb::cc_weights(N);
    for (double s : s_list) {
        require(s >= 0.0 && std::floor(s) == s, "boundary_layer_diagnostic: only integer s >= 0 supported");
        VectorXcd d = mode.phi;
        double sum = 0.0;
        for (int k = 0; k <= static_cast<int>(s); ++k) {
            if (k > 0) d = D.cast<cplx>() * d;
            sum += (w.array() * d.array().abs2()).sum();
        }
        out.emplace_back(s, std::sqrt(sum));
    }
    return out;
}

struct NormGrowth {
    double s = 0.0;
    double exponent = 0.0;  // d log ||phi||_{H^s} / d log |gamma|
};

// |gamma| = sqrt(alpha R); needs two modes at different R
inline std::vector<NormGrowth> boundary_layer_growth(const EigenMode& a, const EigenMode& b,
                                                     const std::vector<double>& s_list) {
    require(a.R != b.R && std::isfinite(a.R) && std::isfinite(b.R), "boundary_layer_growth: need two distinct R");
    auto na = boundary_layer_diagnostic(a, s_list), nb = boundary_layer_diagnostic(b, s_list);
    double ga = std::log(std::sqrt(a.alpha * a.R)), gb = std::log(std::sqrt(b.alpha * b.R));
    std::vector<NormGrowth> g;
    for (std::size_t i = 0; i < s_list.size(); ++i)
        g.push_back({s_list[i], (std::log(nb[i].second) - std::log(na[i].second)) / (gb - ga)});
    return g;
}

struct GrowthRow {
    int n = 0;
    double A = 0.0;
    bool certified_unstable = false;
    double alpha_n = 0.0;
    double alpha_at_max = 0.0;
    double max_growth = 0.0;  // max alpha Im c over the sampled alphas (negative when stable)
    std::vector<std::pair<double, double>> samples;  // (alpha, alpha Im c)
};

struct GrowthOptions {
    std::vector<double> alpha_fractions = {0.2, 0.35, 0.5, 0.65, 0.8};
    std::vector<double> stable_alphas = {0.5, 1.0, 2.0};  // used when no certificate exists
    OSOptions os;
};

// viscous growth rate alpha Im c of the most unstable retained mode, across n
inline std::vector<GrowthRow> growth_rate_vs_n(const std::vector<int>& n_list, double A, double R,
                                               const GrowthOptions& opt = {}) {
    std::vector<GrowthRow> rows;
    for (int n : n_list) {
        ShearProfile p = A == 0.0 ? ShearProfile::linear() : ShearProfile::oscillatory(n, A);
        GrowthRow row;
        row.n = n;
        row.A = A;
        InstabilityCertificate cert = certify_instability(p);
        row.certified_unstable = cert.unstable;
        row.alpha_n = cert.alpha_n;
        std::vector<double> alphas;
        if (cert.unstable)
            for (double f : opt.alpha_fractions) alphas.push_back(f * cert.alpha_n);
        else
            alphas = opt.stable_alphas;
        row.max_growth = -std::numeric_limits<double>::infinity();
        for (double a : alphas) {
            OSSpectrum s = solve_os({p, a, R, 0}, opt.os);
            double g = a * s.max_imag_all;
            if (!s.modes.empty()) g = a * s.modes.front().c.imag();
            row.samples.emplace_back(a, g);
            if (g > row.max_growth) {
                row.max_growth = g;
                row.alpha_at_max = a;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace shearspec
