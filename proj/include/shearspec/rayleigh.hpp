#pragma once

// Inviscid Rayleigh problem (U - c)(phi'' - alpha^2 phi) - U'' phi = 0, phi(0) = phi(1) = 0,
// and continuation of the unstable branch off the neutral mode.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"
#include "shearspec/linalg.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/sturm.hpp"

namespace shearspec {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

enum class ModeKind { rayleigh, orr_sommerfeld };

inline std::string to_string(ModeKind k) { return k == ModeKind::rayleigh ? "rayleigh" : "orr_sommerfeld"; }

struct EigenMode {
    ModeKind kind = ModeKind::rayleigh;
    double alpha = 0.0;
    cplx c;
    VectorXcd phi;  // on `grid`, max |phi| = 1 attained at a real positive value
    VectorXd grid;
    double residual = 0.0;  // relative discrete residual
    double R = std::numeric_limits<double>::infinity();
    int N = 0;
    double refinement_delta = std::numeric_limits<double>::quiet_NaN();  // |c_N - c_fine|
    bool resolved = false;  // refinement_delta below the Cauchy tolerance

    bool unstable(double threshold) const { return c.imag() > threshold; }
};

struct RayleighOptions {
    int N = 0;                  // 0: max(128, 64 n)
    double abs_floor = 1e-8;    // lower limit for the instability threshold
    double cauchy_tol = 1e-6;
    bool refine = true;         // Newton polish of (c, phi)
    bool cauchy_check = true;   // second solve at 2N
};

struct RayleighSolve {
    std::optional<EigenMode> mode;
    VectorXcd spectrum;  // all discrete c at grid N
    double noise_floor = 0.0;
    double threshold = 0.0;
};

inline int rayleigh_grid_size(const ShearProfile& p) { return std::max(128, 64 * p.index()); }

namespace detail {

struct RayleighPencil {
    MatrixXd A, L;  // A phi = c L phi on interior nodes
};

inline RayleighPencil rayleigh_pencil(const VectorXd& U, const VectorXd& U2, double alpha, int N) {
    MatrixXd D = cheb::diff_matrix(N);
    MatrixXd D2 = (D * D).block(1, 1, N - 1, N - 1);
    RayleighPencil P;
    P.L = D2 - alpha * alpha * MatrixXd::Identity(N - 1, N - 1);
    P.A = U.segment(1, N - 1).asDiagonal() * P.L;
    P.A.diagonal() -= U2.segment(1, N - 1);
    return P;
}

inline linalg::EigResult rayleigh_eig(const RayleighPencil& P, bool vectors) {
    MatrixXd M = P.L.partialPivLu().solve(P.A);
    return linalg::eig(M, vectors);
}

// max |Im c| of the linear-shear pencil at the same (alpha, N)
inline double rayleigh_noise_floor(double alpha, int N) {
    VectorXd y = cheb::nodes(N);
    RayleighPencil P = rayleigh_pencil(y, VectorXd::Zero(N + 1), alpha, N);
    linalg::EigResult r = rayleigh_eig(P, false);
    double m = 0.0;
    for (Eigen::Index i = 0; i < r.values.size(); ++i) m = std::max(m, std::abs(r.values[i].imag()));
    return m;
}

inline double pencil_residual(const MatrixXcd& A, const MatrixXcd& L, cplx c, const VectorXcd& phi) {
    VectorXcd r = A * phi - c * (L * phi);
    double scale = (A.cwiseAbs().rowwise().sum().maxCoeff() + std::abs(c) * L.cwiseAbs().rowwise().sum().maxCoeff()) *
                   phi.cwiseAbs().maxCoeff();
    return r.cwiseAbs().maxCoeff() / scale;
}

// Newton on (A - c L) phi = 0 with e_k^T phi = 1; returns false if Im c leaves the upper half-plane
inline bool newton_pencil(const MatrixXcd& A, const MatrixXcd& L, cplx& c, VectorXcd& phi, double tol = 1e-14,
                          int max_iter = 8) {
    const Eigen::Index n = phi.size();
    Eigen::Index k;
    phi.cwiseAbs().maxCoeff(&k);
    phi /= phi[k];
    cplx c0 = c;
    VectorXcd phi0 = phi;
    for (int it = 0; it < max_iter; ++it) {
        if (pencil_residual(A, L, c, phi) < tol) break;
        MatrixXcd J = MatrixXcd::Zero(n + 1, n + 1);
        J.topLeftCorner(n, n) = A - c * L;
        J.topRightCorner(n, 1) = -(L * phi);
        J(n, k) = 1.0;
        VectorXcd F(n + 1);
        F.head(n) = A * phi - c * (L * phi);
        F[n] = phi[k] - 1.0;
        VectorXcd d = J.partialPivLu().solve(F);
        phi -= d.head(n);
        c -= d[n];
        if (!(c.imag() > 0.0) || !std::isfinite(c.real())) {
            c = c0;
            phi = phi0;
            return false;
        }
    }
    return true;
}

inline VectorXcd pad_dirichlet(const VectorXcd& interior) {
    VectorXcd v = VectorXcd::Zero(interior.size() + 2);
    v.segment(1, interior.size()) = interior;
    return v;
}

// scale so that max |phi| = 1 at a real positive entry
inline void normalise_max(VectorXcd& phi) {
    Eigen::Index k;
    phi.cwiseAbs().maxCoeff(&k);
    if (std::abs(phi[k]) > 0.0) phi /= phi[k];
}

}  // namespace detail

inline RayleighSolve solve_rayleigh(const ShearProfile& p, double alpha, cplx c_seed, const RayleighOptions& opt = {}) {
    require(alpha > 0.0, "solve_rayleigh: alpha must be positive");
    require(c_seed.imag() > 0.0, "solve_rayleigh: seed must lie in the upper half-plane (Im c > 0)");
    const int N = opt.N > 0 ? opt.N : rayleigh_grid_size(p);
    VectorXd y = cheb::nodes(N);
    auto P = detail::rayleigh_pencil(sample(p, y, 0), sample(p, y, 2), alpha, N);
    linalg::EigResult r = detail::rayleigh_eig(P, true);

    RayleighSolve out;
    out.spectrum = r.values;
    out.noise_floor = detail::rayleigh_noise_floor(alpha, N);
    out.threshold = std::max(10.0 * out.noise_floor, opt.abs_floor);

    int best = -1;
    for (Eigen::Index i = 0; i < r.values.size(); ++i) {
        if (r.values[i].imag() <= out.threshold) continue;
        if (best < 0 || std::abs(r.values[i] - c_seed) < std::abs(r.values[best] - c_seed)) best = static_cast<int>(i);
    }
    if (best < 0) return out;

    EigenMode m;
    m.kind = ModeKind::rayleigh;
    m.alpha = alpha;
    m.N = N;
    m.grid = y;
    m.c = r.values[best];
    VectorXcd phi = r.vectors.col(best);
    MatrixXcd A = P.A.cast<cplx>(), L = P.L.cast<cplx>();
    if (opt.refine) detail::newton_pencil(A, L, m.c, phi);
    m.residual = detail::pencil_residual(A, L, m.c, phi);
    m.phi = detail::pad_dirichlet(phi);
    detail::normalise_max(m.phi);

    if (opt.cauchy_check) {
        const int N2 = 2 * N;
        VectorXd y2 = cheb::nodes(N2);
        auto P2 = detail::rayleigh_pencil(sample(p, y2, 0), sample(p, y2, 2), alpha, N2);
        VectorXcd v2 = detail::rayleigh_eig(P2, false).values;
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < v2.size(); ++i) d = std::min(d, std::abs(v2[i] - m.c));
        m.refinement_delta = d;
        m.resolved = d < opt.cauchy_tol;
    }
    out.mode = m;
    return out;
}

// (alpha_n, U(y_i), phi_n) as a neutral Rayleigh mode; residual measured on the certificate grid
inline EigenMode neutral_mode(const InstabilityCertificate& cert) {
    if (!cert.unstable || !cert.profile) throw NotUnstableError("neutral_mode: certificate is not unstable");
    const ShearProfile& p = *cert.profile;
    const int N = cert.N;
    VectorXd U = sample(p, cert.grid, 0), U2 = sample(p, cert.grid, 2);
    MatrixXd D = cheb::diff_matrix(N);
    VectorXd phi = cert.phi_n;
    VectorXd lap = D * (D * phi) - cert.alpha_n * cert.alpha_n * phi;
    VectorXd um = U.array() - cert.U_i;
    VectorXd res = um.cwiseProduct(lap) - U2.cwiseProduct(phi);
    double scale = um.cwiseProduct(D * (D * phi)).segment(1, N - 1).cwiseAbs().maxCoeff() +
                   cert.alpha_n * cert.alpha_n * um.cwiseProduct(phi).cwiseAbs().maxCoeff() +
                   U2.cwiseProduct(phi).cwiseAbs().maxCoeff();
    EigenMode m;
    m.kind = ModeKind::rayleigh;
    m.alpha = cert.alpha_n;
    m.c = cplx(cert.U_i, 0.0);
    m.grid = cert.grid;
    m.N = N;
    m.phi = phi.cast<cplx>();
    detail::normalise_max(m.phi);
    m.residual = res.segment(1, N - 1).cwiseAbs().maxCoeff() / scale;
    m.refinement_delta = cert.refinement_delta;
    m.resolved = true;
    if (m.residual >= 1e-6)
        throw ConvergenceError("neutral mode residual " + std::to_string(m.residual) + " exceeds 1e-6");
    return m;
}

struct BranchSample {
    double alpha = 0.0;
    cplx c;
    double residual = 0.0;
    double refinement_delta = 0.0;
    bool resolved = false;
};

struct BranchEnd {
    int direction = 0;        // -1 towards small alpha, +1 towards large alpha
    bool closed = false;      // Im c reached the threshold
    double alpha = 0.0;       // endpoint estimate (closed) or last alpha reached (open)
    double last_imag = 0.0;   // Im c at the last sample in this direction
    std::string reason;
};

struct BranchCurve {
    double alpha_n = 0.0;
    double c_anchor = 0.5;
    double threshold = 0.0;
    std::vector<BranchSample> samples;  // ascending alpha
    std::vector<BranchEnd> ends;        // lower end first
    std::vector<double> endpoints;      // closed-end estimates
    std::vector<std::string> diagnostics;
    double max_growth_rate = 0.0;       // max alpha Im c over resolved samples

    bool empty() const { return samples.empty(); }
};

namespace detail {

// Im c -> 0 by linear extrapolation through the two resolved samples nearest to alpha_edge
inline double extrapolate_endpoint(const std::vector<BranchSample>& s, double alpha_edge) {
    std::vector<const BranchSample*> r;
    for (const auto& b : s)
        if (b.resolved) r.push_back(&b);
    if (r.size() < 2) return alpha_edge;
    std::sort(r.begin(), r.end(), [&](auto a, auto b) {
        return std::abs(a->alpha - alpha_edge) < std::abs(b->alpha - alpha_edge);
    });
    double a1 = r[0]->alpha, i1 = r[0]->c.imag(), a2 = r[1]->alpha, i2 = r[1]->c.imag();
    if (i1 == i2) return alpha_edge;
    return a1 - i1 * (a1 - a2) / (i1 - i2);
}

}  // namespace detail

inline BranchCurve continue_branch(const ShearProfile& p, const InstabilityCertificate& cert, double alpha_step,
                                   int max_steps, const RayleighOptions& opt = {}) {
    BranchCurve br;
    if (!cert.unstable) return br;
    br.alpha_n = cert.alpha_n;
    br.c_anchor = cert.U_i;
    const double step0 = alpha_step > 0.0 ? alpha_step : 0.02 * cert.alpha_n;
    const double min_step = step0 / 64.0;

    for (int dir : {-1, +1}) {
        BranchEnd end;
        end.direction = dir;
        double step = step0, a_prev = cert.alpha_n;
        cplx seed(cert.U_i, 1e-3);
        bool found_any = false;
        int steps = 0, probes = 0;
        const int max_probes = 8;
        for (; steps < max_steps; ++steps) {
            double a = a_prev + dir * step;
            if (a <= 0.0) {
                end.closed = false;
                end.alpha = a_prev;
                end.reason = "reached alpha -> 0 with Im c = " + std::to_string(end.last_imag) +
                             " above threshold; no lower endpoint";
                break;
            }
            RayleighSolve s = solve_rayleigh(p, a, seed, opt);
            br.threshold = std::max(br.threshold, s.threshold);
            if (s.mode) {
                const EigenMode& m = *s.mode;
                br.samples.push_back({a, m.c, m.residual, m.refinement_delta, m.resolved});
                if (!m.resolved)
                    br.diagnostics.push_back("alpha=" + std::to_string(a) +
                                             ": Cauchy test failed, |c_N - c_2N| = " +
                                             std::to_string(m.refinement_delta));
                seed = m.c;
                a_prev = a;
                end.last_imag = m.c.imag();
                found_any = true;
                continue;
            }
            if (!found_any && probes < max_probes) {
                // near the neutral point the mode sinks into the discretised continuous
                // spectrum; keep moving away from the anchor before giving up
                ++probes;
                a_prev = a;
                continue;
            }
            if (found_any && step > min_step) {
                step *= 0.5;
                continue;
            }
            end.closed = true;
            end.reason = "no unstable mode beyond alpha=" + std::to_string(a_prev);
            break;
        }
        if (steps >= max_steps) {
            end.closed = false;
            end.alpha = a_prev;
            end.reason = "max_steps reached at alpha=" + std::to_string(a_prev) + " with Im c = " +
                         std::to_string(end.last_imag);
        }
        if (end.closed) {
            std::sort(br.samples.begin(), br.samples.end(),
                      [](const BranchSample& a, const BranchSample& b) { return a.alpha < b.alpha; });
            end.alpha = detail::extrapolate_endpoint(br.samples, a_prev);
            if (!found_any) {
                end.alpha = detail::extrapolate_endpoint(br.samples, cert.alpha_n);
                end.reason = "no unstable mode within " + std::to_string(max_probes) + " steps of the anchor";
            }
        }
        br.ends.push_back(end);
    }
    std::sort(br.samples.begin(), br.samples.end(),
              [](const BranchSample& a, const BranchSample& b) { return a.alpha < b.alpha; });
    for (const auto& e : br.ends)
        if (e.closed) br.endpoints.push_back(e.alpha);
    for (const auto& s : br.samples)
        if (s.resolved) br.max_growth_rate = std::max(br.max_growth_rate, s.alpha * s.c.imag());
    return br;
}

}  // namespace shearspec
