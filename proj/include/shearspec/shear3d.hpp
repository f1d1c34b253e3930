#pragma once

// Growing modes e^{i alpha0 (x - c t)} (u, v, w, P)(y, z) of the linearised 3D Euler equations about (U(y,z), 0, 0)
// on 0 < y < 1, Lz-periodic in z. Eigenproblem lambda (u, omega) = (F + K)(u, omega), lambda = -i alpha0 c.
// Unknowns are z-Fourier coefficients on the Chebyshev y-grid; multiplication by U is a circular convolution.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"
#include "shearspec/linalg.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/rayleigh.hpp"

namespace shearspec {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct StripGrid {
    int Ny = 128;
    int Nz = 16;
    double Lz = 1.0;
    // optional sinh map y = yc + a sinh(mu (s - s0)) of the Chebyshev variable s, clustering nodes at yc
    double map_center = 0.5;
    double map_strength = 0.0;  // mu; 0 leaves the grid unmapped
};

// y(s), y'(s) for the node-clustering map
struct SinhMap {
    double yc = 0.5, mu = 0.0, a = 1.0, s0 = 0.5;

    SinhMap(double center, double strength) : yc(center), mu(strength) {
        require(center > 0.0 && center < 1.0, "strip map: center must lie inside (0, 1)");
        require(strength >= 0.0 && std::isfinite(strength), "strip map: strength must be >= 0");
        if (mu == 0.0) return;
        // a sinh(mu s0) = yc, a sinh(mu (1 - s0)) = 1 - yc
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double r = std::sinh(mu * mid) * (1.0 - yc) - std::sinh(mu * (1.0 - mid)) * yc;
            (r > 0.0 ? hi : lo) = mid;
        }
        s0 = 0.5 * (lo + hi);
        a = yc / std::sinh(mu * s0);
    }
    double y(double s) const { return mu == 0.0 ? s : yc + a * std::sinh(mu * (s - s0)); }
    double dy(double s) const { return mu == 0.0 ? 1.0 : a * mu * std::cosh(mu * (s - s0)); }
};

// grid, quadrature and spectral derivatives on the strip; physical arrays are Nz x (Ny+1), row = z index
class Strip {
public:
    explicit Strip(StripGrid g) : grid_(g) {
        require(g.Ny >= 8, "strip: Ny >= 8 required");
        require(g.Nz >= 2 && g.Nz % 2 == 0, "strip: Nz must be even and >= 2");
        require(g.Lz > 0.0, "strip: Lz must be positive");
        n1_ = g.Ny + 1;
        SinhMap map(g.map_center, g.map_strength);
        VectorXd sn = cheb::nodes(g.Ny), ds(n1_);
        y_.resize(n1_);
        for (int j = 0; j < n1_; ++j) {
            y_[j] = map.y(sn[j]);
            ds[j] = map.dy(sn[j]);
        }
        y_[0] = 0.0;
        y_[g.Ny] = 1.0;
        wy_ = cheb::cc_weights(g.Ny).cwiseProduct(ds);
        D_ = ds.cwiseInverse().asDiagonal() * cheb::diff_matrix(g.Ny);
        D2_ = D_ * D_;
        J_ = cheb::integration_matrix(g.Ny) * ds.asDiagonal();
        z_.resize(g.Nz);
        kappa_.resize(g.Nz);
        for (int m = 0; m < g.Nz; ++m) {
            z_[m] = g.Lz * m / g.Nz;
            // Nyquist index Nz/2 carries +k_N
            int k = m <= g.Nz / 2 ? m : m - g.Nz;
            kappa_[m] = 2.0 * std::numbers::pi * k / g.Lz;
        }
        E_.resize(g.Nz, g.Nz);
        for (int m = 0; m < g.Nz; ++m)
            for (int k = 0; k < g.Nz; ++k) E_(m, k) = std::polar(1.0, kappa_[k] * z_[m]);
    }

    const StripGrid& grid() const { return grid_; }
    int Ny() const { return grid_.Ny; }
    int Nz() const { return grid_.Nz; }
    int n1() const { return n1_; }
    double Lz() const { return grid_.Lz; }
    const VectorXd& y() const { return y_; }
    const VectorXd& z() const { return z_; }
    const VectorXd& wy() const { return wy_; }
    const MatrixXd& D() const { return D_; }
    const MatrixXd& D2() const { return D2_; }
    const MatrixXd& J() const { return J_; }  // integral from 0
    double kappa(int k) const { return kappa_[k]; }

    MatrixXcd to_coeffs(const MatrixXcd& phys) const { return E_.adjoint() * phys / static_cast<double>(grid_.Nz); }
    MatrixXcd to_phys(const MatrixXcd& coef) const { return E_ * coef; }
    MatrixXcd dy(const MatrixXcd& f) const { return f * D_.transpose(); }
    MatrixXcd dz(const MatrixXcd& f) const {
        MatrixXcd c = to_coeffs(f);
        for (int k = 0; k < grid_.Nz; ++k) c.row(k) *= cplx(0.0, kappa_[k]);
        return to_phys(c);
    }
    // (1/Lz) double integral over the strip
    cplx mean(const MatrixXcd& f) const { return (f * wy_.cast<cplx>()).sum() / static_cast<double>(grid_.Nz); }
    double l2(const MatrixXcd& f) const {
        return std::sqrt(grid_.Lz / grid_.Nz * (f.cwiseAbs2() * wy_).sum());
    }
    // integral over z of a wall row
    cplx wall_integral(const MatrixXcd& f, int j) const { return f.col(j).sum() * (grid_.Lz / grid_.Nz); }

private:
    StripGrid grid_;
    int n1_ = 0;
    VectorXd y_, z_, wy_;
    MatrixXd D_, D2_, J_;
    std::vector<double> kappa_;
    MatrixXcd E_;
};

struct Shear3DProfile {
    StripGrid grid;
    MatrixXd U, Uy, Uz, Uyy, Uyz, Uzz;  // Nz x (Ny+1)
    std::optional<ShearProfile> base;
    double eps = 0.0;
    bool z_independent = true;
    double g_w14 = 0.0;  // discrete W^{1,4} norm of the perturbation shape

    double min_U() const { return U.minCoeff(); }
    double max_U() const { return U.maxCoeff(); }

    static Shear3DProfile from_base(const ShearProfile& b, StripGrid g) {
        return perturbed(b, [](double, double) { return 0.0; }, 0.0, g);
    }

    // U = U0(y) + eps g(y, z); g must vanish on both walls
    static Shear3DProfile perturbed(const ShearProfile& b, const std::function<double(double, double)>& gfun, double eps,
                                    StripGrid g) {
        require(std::isfinite(eps), "Shear3DProfile: eps must be finite");
        Strip s(g);
        const int Nz = g.Nz, n1 = g.Ny + 1;
        MatrixXd G(Nz, n1);
        for (int m = 0; m < Nz; ++m)
            for (int j = 0; j < n1; ++j) G(m, j) = gfun(s.y()[j], s.z()[m]);
        for (int m = 0; m < Nz; ++m)
            if (std::abs(G(m, 0)) > 1e-12 || std::abs(G(m, n1 - 1)) > 1e-12)
                throw DomainError("Shear3DProfile: perturbation must vanish on y = 0 and y = 1");
        Shear3DProfile p;
        p.grid = g;
        p.base = b;
        p.eps = eps;
        VectorXd u0(n1), u1(n1), u2(n1);
        for (int j = 0; j < n1; ++j) {
            u0[j] = b.eval(s.y()[j], 0);
            u1[j] = b.derivative(s.y()[j], 1);
            u2[j] = b.derivative(s.y()[j], 2);
        }
        MatrixXcd Gc = G.cast<cplx>();
        MatrixXd Gy = s.dy(Gc).real(), Gz = s.dz(Gc).real();
        MatrixXd Gyy = s.dy(s.dy(Gc)).real(), Gyz = s.dz(s.dy(Gc)).real(), Gzz = s.dz(s.dz(Gc)).real();
        p.U = (eps * G).rowwise() + u0.transpose();
        p.Uy = (eps * Gy).rowwise() + u1.transpose();
        p.Uyy = (eps * Gyy).rowwise() + u2.transpose();
        p.Uz = eps * Gz;
        p.Uyz = eps * Gyz;
        p.Uzz = eps * Gzz;
        p.z_independent = (eps == 0.0) || G.cwiseAbs().maxCoeff() == 0.0;
        if (p.z_independent) {
            // exact reduction: no roundoff z-dependence from the spectral derivatives
            p.U.rowwise() = u0.transpose();
            p.Uy.rowwise() = u1.transpose();
            p.Uyy.rowwise() = u2.transpose();
            p.Uz.setZero();
            p.Uyz.setZero();
            p.Uzz.setZero();
        }
        double s4 = 0.0;
        for (int m = 0; m < Nz; ++m)
            for (int j = 0; j < n1; ++j)
                s4 += s.wy()[j] * (std::pow(G(m, j), 4) + std::pow(Gy(m, j), 4) + std::pow(Gz(m, j), 4));
        p.g_w14 = std::pow(s4 * g.Lz / Nz, 0.25);
        return p;
    }

    // arbitrary grid function; wall values must be constant in z
    static Shear3DProfile from_grid(const MatrixXd& Ugrid, StripGrid g) {
        Strip s(g);
        require(Ugrid.rows() == g.Nz && Ugrid.cols() == g.Ny + 1, "Shear3DProfile::from_grid: shape mismatch");
        const int n1 = g.Ny + 1;
        for (int m = 0; m < g.Nz; ++m)
            if (std::abs(Ugrid(m, 0) - Ugrid(0, 0)) > 1e-12 || std::abs(Ugrid(m, n1 - 1) - Ugrid(0, n1 - 1)) > 1e-12)
                throw DomainError("Shear3DProfile: wall values must not depend on z");
        Shear3DProfile p;
        p.grid = g;
        p.U = Ugrid;
        MatrixXcd Uc = Ugrid.cast<cplx>();
        p.Uy = s.dy(Uc).real();
        p.Uz = s.dz(Uc).real();
        p.Uyy = s.dy(s.dy(Uc)).real();
        p.Uyz = s.dz(s.dy(Uc)).real();
        p.Uzz = s.dz(s.dz(Uc)).real();
        p.z_independent = true;
        for (int m = 1; m < g.Nz; ++m)
            if ((Ugrid.row(m) - Ugrid.row(0)).cwiseAbs().maxCoeff() != 0.0) p.z_independent = false;
        if (p.z_independent) {
            for (int m = 1; m < g.Nz; ++m) {
                p.Uy.row(m) = p.Uy.row(0);
                p.Uyy.row(m) = p.Uyy.row(0);
            }
            p.Uz.setZero();
            p.Uyz.setZero();
            p.Uzz.setZero();
        }
        return p;
    }
};

// grid clustered at the critical layer U0(yc) = Re c0; unmapped unless the crossing is unique.
// The pole of the mode sits near yc + i d, d = Im c0 / |U0'(yc)|.
inline StripGrid critical_layer_grid(const ShearProfile& U0, cplx c0, int Ny, int Nz, double Lz = 1.0,
                                     double relax = 1.0) {
    StripGrid g{Ny, Nz, Lz};
    const int M = 2000;
    std::vector<double> roots;
    double prev = U0.eval(0.0, 0) - c0.real();
    for (int i = 1; i <= M; ++i) {
        double y1 = static_cast<double>(i) / M, f1 = U0.eval(y1, 0) - c0.real();
        if ((prev < 0.0) != (f1 < 0.0)) {
            double lo = static_cast<double>(i - 1) / M, hi = y1;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = U0.eval(mid, 0) - c0.real();
                ((fm < 0.0) == (prev < 0.0) ? lo : hi) = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = f1;
    }
    if (roots.size() != 1 || c0.imag() <= 0.0) return g;
    const double yc = roots[0];
    if (yc <= 0.05 || yc >= 0.95) return g;
    const double d = c0.imag() / std::abs(U0.derivative(yc, 1));
    g.map_center = yc;
    g.map_strength = relax * 2.0 * std::asinh(1.0 / (2.0 * d));
    return g;
}

// default perturbation shape sin(pi y) cos(2 pi z / Lz); max |g| = 1
inline std::function<double(double, double)> default_gshape(double Lz = 1.0) {
    return [Lz](double y, double z) { return std::sin(std::numbers::pi * y) * std::cos(2.0 * std::numbers::pi * z / Lz); };
}

// per-Fourier-index solution operators on the Chebyshev grid
struct FourierOps {
    MatrixXcd Vf1, Vf2, Wf1, Wf2;  // (f1, f2) -> (v, w)
    MatrixXcd B;                   // mean-zero Neumann inverse of -Laplacian (Q included at k = 0)
    MatrixXcd Q;                   // mean removal at k = 0, identity otherwise
};

inline std::vector<FourierOps> fourier_ops(const Strip& s) {
    const int N = s.Ny(), n1 = s.n1();
    const MatrixXd& D = s.D();
    const MatrixXd& D2 = s.D2();
    MatrixXd Eint = MatrixXd::Identity(n1, n1);
    Eint(0, 0) = 0.0;
    Eint(N, N) = 0.0;
    std::vector<FourierOps> ops(s.Nz());
    for (int k = 0; k < s.Nz(); ++k) {
        FourierOps& o = ops[k];
        const double kap = s.kappa(k);
        if (kap == 0.0) {
            const MatrixXd& J = s.J();
            o.Vf1 = J.cast<cplx>();
            o.Wf2 = J.cast<cplx>();
            o.Vf2 = MatrixXcd::Zero(n1, n1);
            o.Wf1 = MatrixXcd::Zero(n1, n1);
            MatrixXd Q = MatrixXd::Identity(n1, n1) - VectorXd::Ones(n1) * s.wy().transpose();
            o.Q = Q.cast<cplx>();
            // bordered Neumann problem: -h'' + mu = (Qx) inside, h' = 0 at walls, mean(h) = 0
            MatrixXd M = MatrixXd::Zero(n1 + 1, n1 + 1);
            M.topLeftCorner(n1, n1) = -D2;
            M.row(0).head(n1) = D.row(0);
            M.row(N).head(n1) = D.row(N);
            for (int j = 1; j < N; ++j) M(j, n1) = 1.0;
            M.row(n1).head(n1) = s.wy().transpose();
            MatrixXd R = MatrixXd::Zero(n1 + 1, n1);
            R.topRows(n1) = Eint * Q;
            MatrixXd H = M.partialPivLu().solve(R);
            o.B = H.topRows(n1).cast<cplx>();
        } else {
            MatrixXd Nk = D2 - kap * kap * MatrixXd::Identity(n1, n1);
            MatrixXd Dk = Nk;
            Nk.row(0) = D.row(0);
            Nk.row(N) = D.row(N);
            Dk.row(0).setZero();
            Dk.row(N).setZero();
            Dk(0, 0) = 1.0;
            Dk(N, N) = 1.0;
            MatrixXd Ninv = Nk.partialPivLu().solve(Eint);  // phi = Ninv f1
            MatrixXd Dinv = Dk.partialPivLu().solve(Eint);  // chi = Dinv f2
            const cplx ik(0.0, kap);
            o.Vf1 = (D * Ninv).cast<cplx>();
            o.Vf2 = -ik * Dinv.cast<cplx>();
            o.Wf1 = ik * Ninv.cast<cplx>();
            o.Wf2 = (D * Dinv).cast<cplx>();
            o.B = (-Ninv).cast<cplx>();
            o.Q = MatrixXcd::Identity(n1, n1);
        }
    }
    return ops;
}

struct DivCurlResult {
    MatrixXcd v, w;
    double bound_constant = 0.0;  // ||(v,w)||_{H^1} / (||f1|| + ||f2||)
};

inline MatrixXcd divergence(const Strip& s, const MatrixXcd& v, const MatrixXcd& w) { return s.dy(v) + s.dz(w); }
inline MatrixXcd curl(const Strip& s, const MatrixXcd& v, const MatrixXcd& w) { return s.dy(w) - s.dz(v); }

namespace detail {

inline std::pair<MatrixXcd, MatrixXcd> reconstruct_coeffs(const Strip& s, const std::vector<FourierOps>& ops,
                                                          const MatrixXcd& f1c, const MatrixXcd& f2c) {
    MatrixXcd vc(s.Nz(), s.n1()), wc(s.Nz(), s.n1());
    for (int k = 0; k < s.Nz(); ++k) {
        VectorXcd a = f1c.row(k).transpose(), b = f2c.row(k).transpose();
        vc.row(k) = (ops[k].Vf1 * a + ops[k].Vf2 * b).transpose();
        wc.row(k) = (ops[k].Wf1 * a + ops[k].Wf2 * b).transpose();
    }
    return {vc, wc};
}

}  // namespace detail

// (v, w) with div = f1, curl = f2, v = 0 on the walls and zero circulation along each wall
inline DivCurlResult div_curl_reconstruct(const Strip& s, const MatrixXcd& f1, const MatrixXcd& f2,
                                          const std::vector<FourierOps>* ops_in = nullptr) {
    require(f1.rows() == s.Nz() && f1.cols() == s.n1() && f2.rows() == s.Nz() && f2.cols() == s.n1(),
            "div_curl_reconstruct: shape mismatch");
    double scale = s.l2(f1) + s.l2(f2);
    if (std::abs(s.mean(f1)) > 1e-10 * std::max(scale, 1e-300) && scale > 0.0)
        throw DomainError("div_curl_reconstruct: divergence must have zero mean");
    if (std::abs(s.mean(f2)) > 1e-10 * std::max(scale, 1e-300) && scale > 0.0)
        throw DomainError("div_curl_reconstruct: curl must have zero mean (zero wall circulations)");
    std::vector<FourierOps> local;
    if (!ops_in) local = fourier_ops(s);
    const auto& ops = ops_in ? *ops_in : local;
    auto [vc, wc] = detail::reconstruct_coeffs(s, ops, s.to_coeffs(f1), s.to_coeffs(f2));
    DivCurlResult r;
    r.v = s.to_phys(vc);
    r.w = s.to_phys(wc);
    double h1 = 0.0;
    for (const MatrixXcd* f : {&r.v, &r.w}) {
        double a = s.l2(*f), b = s.l2(s.dy(*f)), c = s.l2(s.dz(*f));
        h1 += a * a + b * b + c * c;
    }
    r.bound_constant = scale > 0.0 ? std::sqrt(h1) / scale : 0.0;
    return r;
}

// F + K on stacked Fourier coefficients: index k*n1 + j for u, Nz*n1 + k*n1 + j for omega
struct DiscretizedAK {
    StripGrid grid;
    double alpha0 = 0.0;
    MatrixXcd F_part;
    MatrixXcd K_part;
    VectorXd weights;  // discrete L2 inner product weights on the stacked unknowns

    MatrixXcd A() const { return F_part + K_part; }
};

class AKAssembler {
public:
    AKAssembler(const Shear3DProfile& p, double alpha0)
        : p_(p), s_(p.grid), alpha_(alpha0), ops_(fourier_ops(s_)) {
        require(alpha0 > 0.0, "assemble_AK: alpha0 must be positive");
        require(p.U.rows() == s_.Nz() && p.U.cols() == s_.n1(), "assemble_AK: profile grid mismatch");
        const int Nz = s_.Nz(), n1 = s_.n1();
        const cplx ia(0.0, alpha0);
        Uc_ = s_.to_coeffs(p.U.cast<cplx>());
        Uyc_ = s_.to_coeffs(p.Uy.cast<cplx>());
        Uzc_ = s_.to_coeffs(p.Uz.cast<cplx>());
        double scale = std::max({1.0, p.U.cwiseAbs().maxCoeff(), p.Uy.cwiseAbs().maxCoeff()});
        active_.assign(Nz, false);
        for (int q = 0; q < Nz; ++q) {
            double m = std::max({Uc_.row(q).cwiseAbs().maxCoeff(), Uyc_.row(q).cwiseAbs().maxCoeff(),
                                 Uzc_.row(q).cwiseAbs().maxCoeff()});
            active_[q] = q == 0 || (!p.z_independent && m > 1e-14 * scale);
            if (!active_[q]) {
                Uc_.row(q).setZero();
                Uyc_.row(q).setZero();
                Uzc_.row(q).setZero();
            }
        }
        if (p.z_independent) {
            Uc_.row(0) = p.U.row(0).cast<cplx>();
            Uyc_.row(0) = p.Uy.row(0).cast<cplx>();
            Uzc_.row(0).setZero();
        }
        Vu_.resize(Nz);
        Vw_.resize(Nz);
        Wu_.resize(Nz);
        Ww_.resize(Nz);
        P_.resize(Nz);
        for (int k = 0; k < Nz; ++k) {
            const auto& o = ops_[k];
            Vu_[k] = -ia * o.Vf1 * o.Q;
            Wu_[k] = -ia * o.Wf1 * o.Q;
            Vw_[k] = o.Vf2 * o.Q;
            Ww_[k] = o.Wf2 * o.Q;
            MatrixXcd I = MatrixXcd::Identity(n1, n1);
            P_[k] = (I + alpha0 * alpha0 * o.B).partialPivLu().solve(alpha0 * alpha0 * o.B - o.Q);
        }
    }

    const Strip& strip() const { return s_; }
    const std::vector<FourierOps>& ops() const { return ops_; }
    double alpha0() const { return alpha_; }
    int block_size() const { return 2 * s_.n1(); }
    int size() const { return 2 * s_.n1() * s_.Nz(); }
    bool coupled(int k, int kp) const { return active_[q(k, kp)]; }

    // 2n1 x 2n1 blocks acting on (u_k', omega_k') -> (u_k, omega_k)
    MatrixXcd F_block(int k, int kp) const {
        const int n1 = s_.n1();
        MatrixXcd b = MatrixXcd::Zero(2 * n1, 2 * n1);
        if (!coupled(k, kp)) return b;
        VectorXcd d = cplx(0.0, -alpha_) * Uc_.row(q(k, kp)).transpose();
        b.topLeftCorner(n1, n1) = d.asDiagonal();
        b.bottomRightCorner(n1, n1) = d.asDiagonal();
        return b;
    }

    MatrixXcd K_block(int k, int kp) const {
        const int n1 = s_.n1();
        const cplx ia(0.0, alpha_);
        MatrixXcd b = MatrixXcd::Zero(2 * n1, 2 * n1);
        if (!coupled(k, kp)) return b;
        const int qq = q(k, kp);
        VectorXcd uy = Uyc_.row(qq).transpose(), uz = Uzc_.row(qq).transpose();
        MatrixXcd Gu = uy.asDiagonal() * Vu_[kp] + uz.asDiagonal() * Wu_[kp];
        MatrixXcd Gw = uy.asDiagonal() * Vw_[kp] + uz.asDiagonal() * Ww_[kp];
        b.topLeftCorner(n1, n1) = P_[k] * Gu;
        b.topRightCorner(n1, n1) = P_[k] * Gw;
        if (k == 0) {
            // i alpha0 mean(U u): (U u)_0 = sum_k' U_{-k'} u_k'
            VectorXcd r = s_.wy().cast<cplx>().cwiseProduct(Uc_.row(qq).transpose());
            b.topLeftCorner(n1, n1) += ia * VectorXcd::Ones(n1) * r.transpose();
        }
        b.bottomLeftCorner(n1, n1) = -ia * (uy.asDiagonal() * Wu_[kp] - uz.asDiagonal() * Vu_[kp]);
        b.bottomRightCorner(n1, n1) = -ia * (uy.asDiagonal() * Ww_[kp] - uz.asDiagonal() * Vw_[kp]);
        return b;
    }

    MatrixXcd block(int k, int kp) const { return F_block(k, kp) + K_block(k, kp); }

    DiscretizedAK assemble() const {
        const int Nz = s_.Nz(), n1 = s_.n1(), n = size();
        DiscretizedAK ak;
        ak.grid = s_.grid();
        ak.alpha0 = alpha_;
        ak.F_part = MatrixXcd::Zero(n, n);
        ak.K_part = MatrixXcd::Zero(n, n);
        for (int k = 0; k < Nz; ++k) {
            for (int kp = 0; kp < Nz; ++kp) {
                if (!coupled(k, kp)) continue;
                scatter(ak.F_part, F_block(k, kp), k, kp);
                scatter(ak.K_part, K_block(k, kp), k, kp);
            }
        }
        ak.weights.resize(n);
        for (int c = 0; c < 2; ++c)
            for (int k = 0; k < Nz; ++k) ak.weights.segment(c * Nz * n1 + k * n1, n1) = s_.Lz() * s_.wy();
        return ak;
    }

    void scatter(MatrixXcd& M, const MatrixXcd& b, int k, int kp) const {
        const int Nz = s_.Nz(), n1 = s_.n1();
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                M.block(r * Nz * n1 + k * n1, c * Nz * n1 + kp * n1, n1, n1) += b.block(r * n1, c * n1, n1, n1);
    }

    // stacked coefficient vector <-> physical (u, omega)
    VectorXcd stack(const MatrixXcd& u, const MatrixXcd& om) const {
        const int Nz = s_.Nz(), n1 = s_.n1();
        MatrixXcd uc = s_.to_coeffs(u), oc = s_.to_coeffs(om);
        VectorXcd x(size());
        for (int k = 0; k < Nz; ++k) {
            x.segment(k * n1, n1) = uc.row(k).transpose();
            x.segment(Nz * n1 + k * n1, n1) = oc.row(k).transpose();
        }
        return x;
    }
    std::pair<MatrixXcd, MatrixXcd> unstack(const VectorXcd& x) const {
        const int Nz = s_.Nz(), n1 = s_.n1();
        MatrixXcd uc(Nz, n1), oc(Nz, n1);
        for (int k = 0; k < Nz; ++k) {
            uc.row(k) = x.segment(k * n1, n1).transpose();
            oc.row(k) = x.segment(Nz * n1 + k * n1, n1).transpose();
        }
        return {s_.to_phys(uc), s_.to_phys(oc)};
    }

    // B applied to a physical field
    MatrixXcd apply_B(const MatrixXcd& f) const {
        MatrixXcd c = s_.to_coeffs(f);
        for (int k = 0; k < s_.Nz(); ++k) c.row(k) = (ops_[k].B * c.row(k).transpose()).transpose();
        return s_.to_phys(c);
    }
    MatrixXcd apply_P(const MatrixXcd& f) const {
        MatrixXcd c = s_.to_coeffs(f);
        for (int k = 0; k < s_.Nz(); ++k) c.row(k) = (P_[k] * c.row(k).transpose()).transpose();
        return s_.to_phys(c);
    }

    // K by its componentwise definition, with products taken pointwise in physical space
    std::pair<MatrixXcd, MatrixXcd> apply_K(const MatrixXcd& u, const MatrixXcd& om) const {
        const cplx ia(0.0, alpha_);
        MatrixXcd ones = MatrixXcd::Ones(u.rows(), u.cols());
        MatrixXcd f1 = -ia * (u - s_.mean(u) * ones);
        MatrixXcd f2 = om - s_.mean(om) * ones;
        auto [vc, wc] = detail::reconstruct_coeffs(s_, ops_, s_.to_coeffs(f1), s_.to_coeffs(f2));
        MatrixXcd v = s_.to_phys(vc), w = s_.to_phys(wc);
        MatrixXcd Uc = p_.U.cast<cplx>(), Uy = p_.Uy.cast<cplx>(), Uz = p_.Uz.cast<cplx>();
        MatrixXcd g = Uy.cwiseProduct(v) + Uz.cwiseProduct(w);
        MatrixXcd r1 = ia * s_.mean(Uc.cwiseProduct(u)) * ones + apply_P(g);
        MatrixXcd r2 = -ia * (Uy.cwiseProduct(w) - Uz.cwiseProduct(v));
        return {r1, r2};
    }

    const Shear3DProfile& profile() const { return p_; }

private:
    int q(int k, int kp) const { return ((k - kp) % s_.Nz() + s_.Nz()) % s_.Nz(); }

    Shear3DProfile p_;
    Strip s_;
    double alpha_;
    std::vector<FourierOps> ops_;
    MatrixXcd Uc_, Uyc_, Uzc_;
    std::vector<bool> active_;
    std::vector<MatrixXcd> Vu_, Vw_, Wu_, Ww_, P_;
};

inline DiscretizedAK assemble_AK(const Shear3DProfile& p, double alpha0) { return AKAssembler(p, alpha0).assemble(); }

// mean-removal projector on stacked coefficients (acts on the u and omega components)
inline MatrixXcd mean_projector(const Strip& s) {
    const int Nz = s.Nz(), n1 = s.n1(), n = 2 * Nz * n1;
    MatrixXcd Q = MatrixXcd::Identity(n, n);
    MatrixXcd q0 = fourier_ops(s)[0].Q;
    Q.block(0, 0, n1, n1) = q0;
    Q.block(Nz * n1, Nz * n1, n1, n1) = q0;
    return Q;
}

struct ModeResiduals {
    double mean_u = 0.0;
    double circulation0 = 0.0;
    double circulation1 = 0.0;
    double wall_v = 0.0;
    double omega_consistency = 0.0;
    double eq_u = 0.0;
    double eq_v = 0.0;
    double eq_w = 0.0;
    double eq_div = 0.0;

    double max_invariant() const { return std::max({mean_u, circulation0, circulation1, wall_v, omega_consistency}); }
    double max_equation() const { return std::max({eq_u, eq_v, eq_w, eq_div}); }
};

struct GrowingMode3D {
    double alpha0 = 0.0;
    cplx c;
    cplx lambda;
    StripGrid grid;
    MatrixXcd u, v, w, P, omega;  // physical, Nz x (Ny+1)
    ModeResiduals residuals;
    double eig_residual = 0.0;     // ||A x - lambda x|| / ||x||
    double tail_y = 0.0;           // Chebyshev tail ratio of u
    double tail_z = 0.0;           // Fourier tail ratio of u
    double refinement_delta = std::numeric_limits<double>::quiet_NaN();
    int dominant_fourier = 0;
    bool converged = true;
};

struct Solve3DOptions {
    double abs_floor = 1e-8;       // floor of the Im c threshold
    double tail_tol = 1e-2;        // candidates whose eigenvector tail exceeds this are unresolved
    int dense_limit = 1200;        // full eigendecomposition below this size
    bool refine = true;            // two-grid check for z-independent profiles
    double refine_factor = 1.5;
    int max_inverse_iter = 60;
    double inverse_tol = 1e-11;
    std::vector<cplx> seeds;       // extra shift targets (c values) for large z-dependent problems
};

struct Modes3D {
    std::vector<GrowingMode3D> modes;  // sorted by Im c, largest first
    double noise_floor = 0.0;
    double threshold = 0.0;
    std::vector<cplx> discarded;       // above threshold but unresolved (critical-layer pollution)
    std::string method;
    int size = 0;
};

namespace detail {

inline GrowingMode3D build_mode(const AKAssembler& as, const VectorXcd& x, cplx lambda) {
    const Strip& s = as.strip();
    const Shear3DProfile& p = as.profile();
    const double a = as.alpha0();
    const cplx ia(0.0, a);
    GrowingMode3D m;
    m.alpha0 = a;
    m.lambda = lambda;
    m.c = lambda / (-ia);
    m.grid = s.grid();
    auto [u, om] = as.unstack(x);
    MatrixXcd ones = MatrixXcd::Ones(u.rows(), u.cols());
    auto [vc, wc] = reconstruct_coeffs(s, as.ops(), s.to_coeffs(-ia * (u - s.mean(u) * ones)),
                                       s.to_coeffs(om - s.mean(om) * ones));
    MatrixXcd v = s.to_phys(vc), w = s.to_phys(wc);
    MatrixXcd Uc = p.U.cast<cplx>(), Uy = p.Uy.cast<cplx>(), Uz = p.Uz.cast<cplx>();
    MatrixXcd g = Uy.cwiseProduct(v) + Uz.cwiseProduct(w);
    // QP = alpha^2 B(U u) - c alpha^2 B u + i alpha B(U_y v + U_z w); the mean from the integrated u-equation
    MatrixXcd P = a * a * as.apply_B(Uc.cwiseProduct(u)) - m.c * a * a * as.apply_B(u) + ia * as.apply_B(g);
    cplx meanP = -s.mean((Uc - m.c * ones).cwiseProduct(u)) + cplx(0.0, 1.0 / a) * s.mean(g);
    P += meanP * ones;
    // normalise: max |u| = 1, real and positive there
    Eigen::Index im, jm;
    u.cwiseAbs().maxCoeff(&im, &jm);
    cplx sc = std::abs(u(im, jm)) > 0.0 ? 1.0 / u(im, jm) : 1.0;
    m.u = sc * u;
    m.v = sc * v;
    m.w = sc * w;
    m.P = sc * P;
    m.omega = sc * om;

    double vel = std::max({m.u.cwiseAbs().maxCoeff(), m.v.cwiseAbs().maxCoeff(), m.w.cwiseAbs().maxCoeff()});
    const int N = s.Ny();
    ModeResiduals& r = m.residuals;
    r.mean_u = std::abs(s.mean(m.u)) / vel;
    r.circulation0 = std::abs(s.wall_integral(m.w, 0)) / (s.Lz() * vel);
    r.circulation1 = std::abs(s.wall_integral(m.w, N)) / (s.Lz() * vel);
    r.wall_v = std::max(m.v.col(0).cwiseAbs().maxCoeff(), m.v.col(N).cwiseAbs().maxCoeff()) / vel;
    r.omega_consistency = (m.omega - curl(s, m.v, m.w)).cwiseAbs().maxCoeff() / vel;
    double eq_scale = vel * (1.0 + a);
    MatrixXcd Um = Uc - m.c * ones;
    r.eq_u = (ia * Um.cwiseProduct(m.u) + m.v.cwiseProduct(Uy) + m.w.cwiseProduct(Uz) + ia * m.P).cwiseAbs().maxCoeff() /
             eq_scale;
    r.eq_v = (ia * Um.cwiseProduct(m.v) + s.dy(m.P)).cwiseAbs().maxCoeff() / eq_scale;
    r.eq_w = (ia * Um.cwiseProduct(m.w) + s.dz(m.P)).cwiseAbs().maxCoeff() / eq_scale;
    r.eq_div = (ia * m.u + s.dy(m.v) + s.dz(m.w)).cwiseAbs().maxCoeff() / eq_scale;

    // spectral tails of u
    Eigen::Index rowmax;
    m.u.rowwise().norm().maxCoeff(&rowmax);
    m.tail_y = cheb::tail_ratio(VectorXcd(m.u.row(rowmax).transpose()));
    MatrixXcd uc = s.to_coeffs(m.u);
    VectorXd kmag = uc.rowwise().norm();
    kmag.maxCoeff(&im);
    m.dominant_fourier = static_cast<int>(im);
    double hi = 0.0;
    for (int k = 0; k < s.Nz(); ++k)
        if (std::abs(s.kappa(k)) * s.Lz() / (2.0 * std::numbers::pi) > 0.375 * s.Nz()) hi = std::max(hi, kmag[k]);
    m.tail_z = hi / kmag.maxCoeff();
    return m;
}

inline void sort_modes3d(std::vector<GrowingMode3D>& v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.c.imag() > b.c.imag(); });
}

// Chebyshev tail of a stacked eigenvector, relative to its largest coefficient over all blocks
inline double stacked_tail(const VectorXcd& x, int n1) {
    const int N = n1 - 1, nb = static_cast<int>(x.size()) / n1;
    const MatrixXd C = cheb::values_to_coeffs(N);
    const int start = N - std::max(1, N / 10);
    double lead = 0.0, tail = 0.0;
    for (int b = 0; b < nb; ++b) {
        VectorXcd seg = x.segment(b * n1, n1);
        VectorXd mag = (C * seg.real()).cwiseAbs() + (C * seg.imag()).cwiseAbs();
        lead = std::max(lead, mag.maxCoeff());
        tail = std::max(tail, mag.segment(start, N + 1 - start).maxCoeff());
    }
    return lead > 0.0 ? tail / lead : 0.0;
}

inline double residual_norm(const MatrixXcd& A, const VectorXcd& x, cplx lam) {
    return (A * x - lam * x).norm() / x.norm();
}

// eigenvalues of one diagonal block of a z-independent problem
inline linalg::EigResult block_eig(const AKAssembler& as, int k, bool vectors) {
    return linalg::eig(MatrixXcd(as.block(k, k)), vectors);
}

}  // namespace detail

// max Im c over resolved eigenvalues of the linear-shear control at the same grid and alpha0 (exactly stable flow)
inline double linear_shear_noise_floor(double alpha0, StripGrid g, double tail_tol = 1e-2) {
    static std::mutex mu;
    static std::map<std::tuple<double, int, int, double, double>, double> cache;
    auto key = std::make_tuple(alpha0, g.Ny, g.Nz, g.Lz, tail_tol);
    {
        std::lock_guard<std::mutex> lk(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    AKAssembler as(Shear3DProfile::from_base(ShearProfile::linear(), g), alpha0);
    double mx = 0.0;
    for (int k = 0; k < g.Nz; ++k) {
        auto r = detail::block_eig(as, k, true);
        for (Eigen::Index i = 0; i < r.values.size(); ++i)
            if (detail::stacked_tail(r.vectors.col(i), g.Ny + 1) < tail_tol)
                mx = std::max(mx, r.values[i].real() / alpha0);
    }
    std::lock_guard<std::mutex> lk(mu);
    cache[key] = mx;
    return mx;
}

inline Modes3D solve_3d_modes(const Shear3DProfile& p, double alpha0, const Solve3DOptions& opt = {}) {
    AKAssembler as(p, alpha0);
    const Strip& s = as.strip();
    const int Nz = s.Nz(), n1 = s.n1();
    Modes3D out;
    out.size = as.size();
    out.noise_floor = linear_shear_noise_floor(alpha0, p.grid, opt.tail_tol);
    out.threshold = std::max(10.0 * out.noise_floor, opt.abs_floor);
    const double thr = out.threshold;

    auto embed = [&](int k, const VectorXcd& xb) {
        VectorXcd x = VectorXcd::Zero(as.size());
        x.segment(k * n1, n1) = xb.head(n1);
        x.segment(Nz * n1 + k * n1, n1) = xb.tail(n1);
        return x;
    };

    if (p.z_independent) {
        out.method = "block";
        for (int k = 0; k < Nz; ++k) {
            MatrixXcd Ab = as.block(k, k);
            auto r = linalg::eig(Ab, true);
            for (Eigen::Index i = 0; i < r.values.size(); ++i) {
                if (r.values[i].real() / alpha0 <= thr) continue;
                VectorXcd xb = r.vectors.col(i);
                if (detail::stacked_tail(xb, n1) >= opt.tail_tol) {
                    out.discarded.push_back(r.values[i] / cplx(0.0, -alpha0));
                    continue;
                }
                GrowingMode3D m = detail::build_mode(as, embed(k, xb), r.values[i]);
                m.eig_residual = detail::residual_norm(Ab, xb, r.values[i]);
                if (opt.refine && p.base) {
                    StripGrid g2 = p.grid;
                    g2.Ny = static_cast<int>(std::lround(opt.refine_factor * p.grid.Ny));
                    AKAssembler as2(Shear3DProfile::from_base(*p.base, g2), alpha0);
                    auto r2 = detail::block_eig(as2, k, false);
                    double d = std::numeric_limits<double>::infinity();
                    for (Eigen::Index j = 0; j < r2.values.size(); ++j)
                        d = std::min(d, std::abs(r2.values[j] - r.values[i]) / alpha0);
                    m.refinement_delta = d;
                }
                out.modes.push_back(std::move(m));
            }
        }
    } else if (as.size() <= opt.dense_limit) {
        out.method = "dense";
        MatrixXcd A = as.assemble().A();
        auto r = linalg::eig(A, true);
        for (Eigen::Index i = 0; i < r.values.size(); ++i) {
            if (r.values[i].real() / alpha0 <= thr) continue;
            if (detail::stacked_tail(r.vectors.col(i), n1) >= opt.tail_tol) {
                out.discarded.push_back(r.values[i] / cplx(0.0, -alpha0));
                continue;
            }
            GrowingMode3D m = detail::build_mode(as, r.vectors.col(i), r.values[i]);
            m.eig_residual = detail::residual_norm(A, r.vectors.col(i), r.values[i]);
            out.modes.push_back(std::move(m));
        }
    } else {
        out.method = "shift-invert";
        // seeds: unstable modes of the z-averaged profile, plus any requested targets
        MatrixXd Ubar = p.U.colwise().mean().replicate(Nz, 1);
        Shear3DProfile avg = Shear3DProfile::from_grid(Ubar, p.grid);
        AKAssembler as0(avg, alpha0);
        std::vector<std::pair<cplx, VectorXcd>> seeds;
        for (int k = 0; k < Nz; ++k) {
            auto r = detail::block_eig(as0, k, true);
            for (Eigen::Index i = 0; i < r.values.size(); ++i)
                if (r.values[i].real() / alpha0 > thr && detail::stacked_tail(r.vectors.col(i), n1) < opt.tail_tol)
                    seeds.push_back({r.values[i], embed(k, r.vectors.col(i))});
        }
        for (cplx c : opt.seeds) {
            const cplx sig = cplx(0.0, -alpha0) * c;
            bool near = false;
            for (const auto& sd : seeds)
                if (std::abs(sd.first - sig) < 1e-2 * alpha0) near = true;
            if (near) continue;
            VectorXcd x0 = VectorXcd::Ones(as.size()) / std::sqrt(static_cast<double>(as.size()));
            seeds.push_back({cplx(0.0, -alpha0) * c, x0});
        }
        if (!seeds.empty()) {
            MatrixXcd A = as.assemble().A();
            for (auto& [sigma, x0] : seeds) {
                MatrixXcd S = A;
                S.diagonal().array() -= sigma;
                linalg::ComplexLU lu(std::move(S));
                VectorXcd x = x0 / x0.norm();
                cplx lam = sigma;
                double res = std::numeric_limits<double>::infinity();
                const double scale = alpha0 * std::max(std::abs(p.max_U()), std::abs(p.min_U())) + std::abs(sigma);
                int it = 0;
                for (; it < opt.max_inverse_iter; ++it) {
                    x = lu.solve(x);
                    x /= x.norm();
                    VectorXcd Ax = A * x;
                    lam = x.dot(Ax);  // x^H A x
                    res = (Ax - lam * x).norm();
                    if (res < opt.inverse_tol * scale) break;
                }
                if (lam.real() / alpha0 <= thr) continue;
                if (detail::stacked_tail(x, n1) >= opt.tail_tol) {
                    out.discarded.push_back(lam / cplx(0.0, -alpha0));
                    continue;
                }
                bool dup = false;
                for (const auto& m : out.modes)
                    if (std::abs(m.lambda - lam) < 1e-8 * scale) dup = true;
                if (dup) continue;
                GrowingMode3D m = detail::build_mode(as, x, lam);
                m.eig_residual = res;
                m.converged = res < opt.inverse_tol * scale * 1e3;
                out.modes.push_back(std::move(m));
            }
        }
    }
    detail::sort_modes3d(out.modes);
    return out;
}

// Direct discretisation of the (v, w) system, generalized eigenproblem in c; coarse grids only.
inline std::vector<cplx> direct_vw_modes(const Shear3DProfile& p, double alpha0, double threshold = 1e-8,
                                         int max_size = 1600) {
    Strip s(p.grid);
    const int Nz = s.Nz(), n1 = s.n1(), N = s.Ny(), n = 2 * Nz * n1;
    require(n <= max_size, "direct_vw_modes: grid too large for the dense cross-check");
    const double a2 = alpha0 * alpha0;
    MatrixXcd Uc = s.to_coeffs(p.U.cast<cplx>()), Uyc = s.to_coeffs(p.Uy.cast<cplx>()),
              Uzc = s.to_coeffs(p.Uz.cast<cplx>()), Uyyc = s.to_coeffs(p.Uyy.cast<cplx>()),
              Uyzc = s.to_coeffs(p.Uyz.cast<cplx>()), Uzzc = s.to_coeffs(p.Uzz.cast<cplx>());
    const MatrixXcd D = s.D().cast<cplx>(), D2 = s.D2().cast<cplx>(), I = MatrixXcd::Identity(n1, n1);
    // unknown layout: v_k at k*n1, w_k at Nz*n1 + k*n1; rows: eq1 then eq2, same layout
    MatrixXcd A = MatrixXcd::Zero(n, n), B = MatrixXcd::Zero(n, n);
    auto vb = [&](int k) { return k * n1; };
    auto wb = [&](int k) { return Nz * n1 + k * n1; };
    for (int k = 0; k < Nz; ++k) {
        for (int kp = 0; kp < Nz; ++kp) {
            const int q = ((k - kp) % Nz + Nz) % Nz;
            const cplx ik(0.0, s.kappa(kp));
            const double kk = s.kappa(kp) * s.kappa(kp);
            auto dg = [&](const MatrixXcd& C) { return MatrixXcd(C.row(q).transpose().asDiagonal()); };
            MatrixXcd Uq = dg(Uc), Uyq = dg(Uyc), Uzq = dg(Uzc), Uyyq = dg(Uyyc), Uyzq = dg(Uyzc), Uzzq = dg(Uzzc);
            // eq1: (U - c)(v_yy - a2 v + w_yz) - U_yy v - U_yz w - U_z w_y + U_y w_z
            MatrixXcd L1v = D2 - a2 * I, L1w = ik * D;
            MatrixXcd e1v = Uq * L1v - Uyyq, e1w = Uq * L1w - Uyzq - Uzq * D + ik * Uyq;
            // eq2: (U - c)(w_zz - a2 w + v_yz) - U_zz w - U_yz v - U_y v_z + U_z v_y
            MatrixXcd L2w = -(kk + a2) * I, L2v = ik * D;
            MatrixXcd e2w = Uq * L2w - Uzzq, e2v = Uq * L2v - Uyzq - ik * Uyq + Uzq * D;
            A.block(vb(k), vb(kp), n1, n1) += e1v;
            A.block(vb(k), wb(kp), n1, n1) += e1w;
            A.block(wb(k), wb(kp), n1, n1) += e2w;
            A.block(wb(k), vb(kp), n1, n1) += e2v;
            if (k == kp) {
                B.block(vb(k), vb(kp), n1, n1) += L1v;
                B.block(vb(k), wb(kp), n1, n1) += L1w;
                B.block(wb(k), wb(kp), n1, n1) += L2w;
                B.block(wb(k), vb(kp), n1, n1) += L2v;
            }
        }
        // v = 0 on the walls
        for (int j : {0, N}) {
            A.row(vb(k) + j).setZero();
            B.row(vb(k) + j).setZero();
            A(vb(k) + j, vb(k) + j) = 1.0;
        }
    }
    auto r = linalg::eig(A, B, false);
    std::vector<cplx> out;
    for (Eigen::Index i = 0; i < r.alpha.size(); ++i) {
        if (std::abs(r.beta[i]) <= 1e-13 * std::abs(r.alpha[i])) continue;
        cplx c = r.alpha[i] / r.beta[i];
        if (std::abs(c) > 1e3 || c.imag() <= threshold) continue;
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return a.imag() > b.imag(); });
    return out;
}

struct PersistenceRow {
    double eps = 0.0;
    bool lost = false;
    cplx c;
    double defect = std::numeric_limits<double>::quiet_NaN();
    double w14 = 0.0;  // eps ||g||_{W^{1,4}}
    std::string method;
    double max_invariant = 0.0;
    double max_equation = 0.0;
    double tail_y = 0.0;
    double tail_z = 0.0;
    double threshold = 0.0;
};

struct PersistenceTable {
    double alpha0 = 0.0;
    cplx c0;
    StripGrid grid;
    std::vector<PersistenceRow> rows;  // in eps_list order
    std::vector<std::optional<GrowingMode3D>> modes;
    bool defect_increasing = false;    // over non-lost rows with eps > 0, sorted by eps
};

inline PersistenceTable persistence_sweep(const ShearProfile& U0, const std::function<double(double, double)>& g,
                                          const std::vector<double>& eps_list, double alpha0, StripGrid grid = {},
                                          const Solve3DOptions& opt = {}, int workers = 0,
                                          bool cluster_at_critical_layer = true) {
    require(alpha0 > 0.0, "persistence_sweep: alpha0 must be positive");
    PersistenceTable t;
    t.alpha0 = alpha0;
    RayleighOptions ro;
    auto rs = solve_rayleigh(U0, alpha0, {0.5, 0.1}, ro);
    if (!rs.mode) throw NotUnstableError("persistence_sweep: U0 has no unstable Rayleigh mode at alpha0");
    t.c0 = rs.mode->c;
    if (cluster_at_critical_layer && grid.map_strength == 0.0)
        grid = critical_layer_grid(U0, t.c0, grid.Ny, grid.Nz, grid.Lz);
    t.grid = grid;
    t.rows.resize(eps_list.size());
    t.modes.resize(eps_list.size());

    auto run = [&](std::size_t i) {
        const double eps = eps_list[i];
        PersistenceRow row;
        row.eps = eps;
        Shear3DProfile S = Shear3DProfile::perturbed(U0, g, eps, grid);
        row.w14 = std::abs(eps) * S.g_w14;
        Solve3DOptions o = opt;
        o.seeds.push_back(t.c0);
        Modes3D ms = solve_3d_modes(S, alpha0, o);
        row.method = ms.method;
        row.threshold = ms.threshold;
        const GrowingMode3D* best = nullptr;
        for (const auto& m : ms.modes)
            if (!best || std::abs(m.c - t.c0) < std::abs(best->c - t.c0)) best = &m;
        if (!best) {
            row.lost = true;
        } else {
            row.c = best->c;
            row.defect = std::abs(best->c - t.c0);
            row.max_invariant = best->residuals.max_invariant();
            row.max_equation = best->residuals.max_equation();
            row.tail_y = best->tail_y;
            row.tail_z = best->tail_z;
            t.modes[i] = *best;
        }
        t.rows[i] = row;
    };

    unsigned nw = workers > 0 ? static_cast<unsigned>(workers)
                              : std::min<unsigned>(2u, std::max(1u, std::thread::hardware_concurrency()));
    nw = std::min<unsigned>(nw, static_cast<unsigned>(std::max<std::size_t>(1, eps_list.size())));
    if (nw <= 1) {
        for (std::size_t i = 0; i < eps_list.size(); ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errs(nw);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i; (i = next++) < eps_list.size();) run(i);
                } catch (...) {
                    errs[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    std::vector<std::pair<double, double>> d;
    for (const auto& r : t.rows)
        if (!r.lost && r.eps > 0.0) d.push_back({r.eps, r.defect});
    std::sort(d.begin(), d.end());
    t.defect_increasing = d.size() >= 2;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (!(d[i].second > d[i - 1].second)) t.defect_increasing = false;
    return t;
}

}  // namespace shearspec
