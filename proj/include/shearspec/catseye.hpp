#pragma once

// Travelling waves bifurcating from the neutral mode: alpha^2 psi_xixi + psi_yy = f(psi),
// psi = psi*_rel + w, psi*_rel(y) = int_{1/2}^y (U - 1/2).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"
#include "shearspec/linalg.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/sturm.hpp"

namespace shearspec {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

// C(w) = cos(k sqrt w), S(w) = sin(k sqrt w)/(k sqrt w), continued to w < 0 by cosh/sinh.
// Also returns 1 - C accurately near w = 0.
struct CosSinc {
    double C, S, one_minus_C;
};

inline CosSinc cos_sinc(double k, double w) {
    const double z = k * k * w;
    if (std::abs(z) < 0.1) {
        // sum over m of (-z)^m/(2m)! and (-z)^m/(2m+1)!
        double termC = 1.0, termS = 1.0, C = 1.0, S = 1.0, omc = 0.0;
        for (int m = 1; m <= 12; ++m) {
            termC *= -z / ((2.0 * m - 1.0) * (2.0 * m));
            termS *= -z / ((2.0 * m) * (2.0 * m + 1.0));
            C += termC;
            S += termS;
            omc -= termC;
        }
        return {C, S, omc};
    }
    if (w > 0.0) {
        double r = k * std::sqrt(w);
        return {std::cos(r), std::sin(r) / r, 1.0 - std::cos(r)};
    }
    double r = k * std::sqrt(-w);
    return {std::cosh(r), std::sinh(r) / r, 1.0 - std::cosh(r)};
}

}  // namespace detail

// psi*_rel and its y-derivatives for U_n
inline double psi_star(int n, double A, double y, int order = 0) {
    const double pi = std::numbers::pi, k = 4.0 * n * pi;
    switch (order) {
        case 0: return 0.5 * (y - 0.5) * (y - 0.5) + A / (4.0 * pi * n * n) * (1.0 - std::cos(k * y));
        case 1: return y - 0.5 + A / n * std::sin(k * y);
        case 2: return 1.0 + 4.0 * pi * A * std::cos(k * y);
        case 3: return -16.0 * pi * pi * n * A * std::sin(k * y);
        default: throw DomainError("psi_star: order must be 0..3");
    }
}

// f with f(psi*_rel(y)) = U'(y), evaluated by inverting psi*_rel in t = (y - 1/2)^2.
// t < 0 continues f analytically below 0 = psi*_rel(1/2), which the eye interior needs.
struct NonlinearityF {
    int n = 1;
    double A = 0.0;
    std::vector<double> knots;             // psi*_rel values, ascending
    std::vector<double> values;            // f at the knots
    std::vector<double> derivative_table;  // f' at the knots
    double domain_lo = 0.0;
    double domain_hi = 0.0;                // psi*_rel(0) = 1/8

    double k() const { return 4.0 * n * std::numbers::pi; }

    double psi_of_t(double t) const {
        auto cs = detail::cos_sinc(k(), t);
        return 0.5 * t + A / (4.0 * std::numbers::pi * n * n) * cs.one_minus_C;
    }
    double dpsi_dt(double t) const { return 0.5 + 2.0 * std::numbers::pi * A * detail::cos_sinc(k(), t).S; }

    double t_of(double s) const {
        double lo, hi;
        if (s >= 0.0) {
            lo = 0.0;
            hi = 0.25;
            while (psi_of_t(hi) < s) {
                hi += 0.25;
                if (hi > 4.0 || dpsi_dt(hi) <= 0.0) throw DomainError("NonlinearityF: value above the invertible range");
            }
        } else {
            hi = 0.0;
            lo = -1e-3;
            while (psi_of_t(lo) > s) {
                lo *= 2.0;
                if (lo < -1e3) throw DomainError("NonlinearityF: value below the invertible range");
            }
        }
        double t = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            double g = psi_of_t(t) - s;
            if (g == 0.0) return t;
            if (g > 0.0) hi = t; else lo = t;
            double d = dpsi_dt(t);
            double tn = t - g / d;
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            if (std::abs(tn - t) <= 1e-17 + 2e-16 * std::abs(t)) return tn;
            t = tn;
            if (hi - lo <= 1e-17 + 4e-16 * std::abs(t)) return t;
        }
        return t;
    }

    double operator()(double s) const { return 1.0 + 4.0 * std::numbers::pi * A * detail::cos_sinc(k(), t_of(s)).C; }

    // f'(s) = Q at the preimage
    double fprime(double s) const {
        auto cs = detail::cos_sinc(k(), t_of(s));
        const double pi = std::numbers::pi;
        return -32.0 * pi * pi * pi * n * n * A * cs.S / (0.5 + 2.0 * pi * A * cs.S);
    }

    // monotone branch y in [0, 1/2] for s in [0, 1/8]
    double y_of(double s) const {
        require(s >= domain_lo && s <= domain_hi, "NonlinearityF::y_of: value outside [0, max psi*]");
        return 0.5 - std::sqrt(std::max(0.0, t_of(s)));
    }
};

inline NonlinearityF build_f(const ShearProfile& p, int n_knots = 129) {
    require(p.kind() == ProfileKind::oscillatory, "build_f: oscillatory profile required");
    require(n_knots >= 3, "build_f: need at least 3 knots");
    if (!(p.amplitude() > 0.0 && min_slope(p) > 0.0))
        throw DomainError("build_f: psi*_rel is not monotone on [0, 1/2] (profile outside its validity range)");
    NonlinearityF F;
    F.n = p.n();
    F.A = p.amplitude();
    F.domain_lo = 0.0;
    F.domain_hi = psi_star(F.n, F.A, 0.0);
    for (int j = 0; j < n_knots; ++j) {
        // cosine-spaced knots on [0, 1/2], listed from y = 1/2 (psi = 0) down to y = 0
        double y = 0.25 * (1.0 + std::cos(std::numbers::pi * j / (n_knots - 1)));
        double s = psi_star(F.n, F.A, y);
        F.knots.push_back(s);
        F.values.push_back(psi_star(F.n, F.A, y, 2));
        F.derivative_table.push_back(F.fprime(s));
    }
    for (std::size_t j = 1; j < F.knots.size(); ++j)
        if (!(F.knots[j] > F.knots[j - 1])) throw DomainError("build_f: psi*_rel inversion lost monotonicity");
    return F;
}

// max over the Chebyshev grid of |d^2 psi*/dy^2 - f(psi*)|
inline double reconstruction_residual(const NonlinearityF& F, int N = 128) {
    VectorXd y = cheb::nodes(N);
    MatrixXd D = cheb::diff_matrix(N);
    VectorXd s(N + 1);
    for (int j = 0; j <= N; ++j) s[j] = psi_star(F.n, F.A, y[j]);
    VectorXd d2 = D * (D * s);
    double r = 0.0;
    for (int j = 0; j <= N; ++j) r = std::max(r, std::abs(d2[j] - F(s[j])));
    return r;
}

enum class WaveOrder { leading, newton };

inline std::string to_string(WaveOrder o) { return o == WaveOrder::leading ? "leading" : "newton"; }

// psi_rel(xi, y) = psi*_rel(y) + sum_k cos(k xi) W_k(y)
class WaveField {
public:
    WaveField() = default;
    WaveField(int n, double A, std::vector<VectorXd> harmonic_values) : n_(n), A_(A) {
        for (auto& v : harmonic_values) {
            auto s = cheb::Series::from_values(v);
            W1_.push_back(s.derivative());
            W2_.push_back(W1_.back().derivative());
            W_.push_back(std::move(s));
        }
    }

    int harmonics() const { return static_cast<int>(W_.size()); }

    double operator()(double xi, double y) const {
        double v = psi_star(n_, A_, y);
        for (int k = 0; k < harmonics(); ++k) v += std::cos(k * xi) * W_[k](y);
        return v;
    }

    Eigen::Vector2d gradient(double xi, double y) const {
        Eigen::Vector2d g(0.0, psi_star(n_, A_, y, 1));
        for (int k = 0; k < harmonics(); ++k) {
            g[0] -= k * std::sin(k * xi) * W_[k](y);
            g[1] += std::cos(k * xi) * W1_[k](y);
        }
        return g;
    }

    Eigen::Matrix2d hessian(double xi, double y) const {
        double xx = 0.0, xy = 0.0, yy = psi_star(n_, A_, y, 2);
        for (int k = 0; k < harmonics(); ++k) {
            double c = std::cos(k * xi), s = std::sin(k * xi);
            xx -= k * k * c * W_[k](y);
            xy -= k * s * W1_[k](y);
            yy += c * W2_[k](y);
        }
        Eigen::Matrix2d H;
        H << xx, xy, xy, yy;
        return H;
    }

private:
    int n_ = 1;
    double A_ = 0.0;
    std::vector<cheb::Series> W_, W1_, W2_;
};

struct TravellingWave {
    int n = 1;
    double A = 0.0;
    double beta = 0.0;
    double alpha_sq = 0.0;
    double alpha_n_sq = 0.0;  // neutral value on the same y-grid (reference for alpha^2(beta) -> alpha_n^2)
    WaveOrder order = WaveOrder::leading;
    VectorXd xi;              // [0, 2pi], endpoints included
    VectorXd y;               // Chebyshev nodes
    MatrixXd psi_rel;         // psi_rel(xi_i, y_j)
    WaveField field;
    int iterations = 0;
    double residual = 0.0;

    double period() const { return 2.0 * std::numbers::pi / std::sqrt(alpha_sq); }  // in x
    double operator()(double x, double yy) const { return field(x, yy); }
};

namespace detail {

inline void check_wave_certificate(const ShearProfile& p, const InstabilityCertificate& cert) {
    require(p.kind() == ProfileKind::oscillatory, "travelling wave: oscillatory profile required");
    if (!cert.unstable) throw NotUnstableError("travelling wave: certificate is not unstable");
    require(std::abs(cert.witness_inflection - 0.5) < 1e-12 && std::abs(cert.U_i - 0.5) < 1e-12,
            "travelling wave: the bifurcation line must be y = 1/2");
    require(cert.phi_n.size() == cert.grid.size() && cert.phi_n.size() > 2, "travelling wave: certificate has no phi_n");
}

inline VectorXd full_xi_grid(int M) {
    VectorXd xi(2 * M + 1);
    for (int j = 0; j <= 2 * M; ++j) xi[j] = std::numbers::pi * j / M;
    xi[2 * M] = 2.0 * std::numbers::pi;
    return xi;
}

// half-period values w(xi_j, y), xi_j = pi j/M -> cosine coefficient profiles (DCT-I)
inline std::vector<VectorXd> cosine_harmonics(const MatrixXd& w_half) {
    const int M = static_cast<int>(w_half.rows()) - 1;
    std::vector<VectorXd> a(M + 1, VectorXd::Zero(w_half.cols()));
    for (int k = 0; k <= M; ++k) {
        double ck = (k == 0 || k == M) ? 2.0 : 1.0;
        for (int j = 0; j <= M; ++j) {
            double cj = (j == 0 || j == M) ? 2.0 : 1.0;
            a[k] += (2.0 / (M * ck * cj)) * std::cos(std::numbers::pi * j * k / M) * w_half.row(j).transpose();
        }
    }
    return a;
}

// second derivative for even 2pi-periodic functions sampled at xi_j = pi j/M, j = 0..M
inline MatrixXd even_fourier_d2(int M) {
    const int Nf = 2 * M;
    const double h = 2.0 * std::numbers::pi / Nf;
    auto d2 = [&](int p, int q) {
        int d = p - q;
        if (d == 0) return -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
        double s = std::sin(0.5 * h * d);
        return -0.5 * ((d % 2) ? -1.0 : 1.0) / (s * s);
    };
    MatrixXd E = MatrixXd::Zero(M + 1, M + 1);
    for (int j = 0; j <= M; ++j) {
        for (int q = 0; q <= M; ++q) {
            E(j, q) = d2(j, q);
            if (q != 0 && q != M) E(j, q) += d2(j, Nf - q);
        }
    }
    return E;
}

}  // namespace detail

inline TravellingWave leading_order_wave(const ShearProfile& p, const InstabilityCertificate& cert, double beta,
                                         int M = 16) {
    detail::check_wave_certificate(p, cert);
    require(beta >= 0.0, "leading_order_wave: beta must be >= 0");
    require(M >= 2, "leading_order_wave: need M >= 2");
    TravellingWave w;
    w.n = p.n();
    w.A = p.amplitude();
    w.beta = beta;
    w.alpha_sq = cert.alpha_n * cert.alpha_n;
    w.alpha_n_sq = w.alpha_sq;
    w.order = WaveOrder::leading;
    w.xi = detail::full_xi_grid(M);
    w.y = cert.grid;
    w.psi_rel.resize(w.xi.size(), w.y.size());
    for (Eigen::Index i = 0; i < w.xi.size(); ++i) {
        // cos of the exact grid angle; cos(2pi - xi) is taken from the mirrored index so evenness is exact
        Eigen::Index im = std::min(i, w.xi.size() - 1 - i);
        double c = std::cos(w.xi[im]);
        for (Eigen::Index j = 0; j < w.y.size(); ++j)
            w.psi_rel(i, j) = psi_star(w.n, w.A, w.y[j]) + beta * cert.phi_n[j] * c;
    }
    std::vector<VectorXd> h(2, VectorXd::Zero(w.y.size()));
    h[1] = beta * cert.phi_n;
    w.field = WaveField(w.n, w.A, h);
    return w;
}

struct WaveGrid {
    int Nxi = 16;  // points per full period (even); the unknowns live on the half period
    int Ny = 0;    // Chebyshev N in y (0: max(64, 48 n))
};

struct NewtonOptions {
    double tol = 1e-12;       // target max-norm residual
    double accept = 1e-8;     // largest residual accepted when progress stalls
    int max_iter = 30;
};

// Discrete neutral problem on an interior Chebyshev grid with Q = f'(psi*):
// returns (alpha_n^2, phi_n) with phi_n L2-normalised and positive.
inline std::pair<double, VectorXd> discrete_neutral_mode(const NonlinearityF& F, int N) {
    VectorXd y = cheb::nodes(N);
    MatrixXd D = cheb::diff_matrix(N);
    MatrixXd D2 = (D * D).block(1, 1, N - 1, N - 1);
    MatrixXd L = -D2;
    for (int i = 1; i < N; ++i) L(i - 1, i - 1) += F.fprime(psi_star(F.n, F.A, y[i]));
    auto r = linalg::eig(L, true);
    int best = -1;
    for (Eigen::Index i = 0; i < r.values.size(); ++i) {
        if (std::abs(r.values[i].imag()) > 1e-8 * (1.0 + std::abs(r.values[i]))) continue;
        if (best < 0 || r.values[i].real() < r.values[best].real()) best = static_cast<int>(i);
    }
    if (best < 0) throw ConvergenceError("discrete_neutral_mode: no real eigenvalue");
    double lam = r.values[best].real();
    if (lam >= 0.0) throw NotUnstableError("discrete_neutral_mode: L has no negative eigenvalue");
    VectorXd phi = VectorXd::Zero(N + 1);
    phi.segment(1, N - 1) = r.vectors.col(best).real();
    VectorXd wts = cheb::cc_weights(N);
    phi /= std::sqrt((wts.array() * phi.array().square()).sum());
    if (phi.sum() < 0.0) phi = -phi;
    return {-lam, phi};
}

inline TravellingWave newton_branch(const ShearProfile& p, const InstabilityCertificate& cert, double beta,
                                    WaveGrid grid = {}, const NewtonOptions& opt = {}) {
    detail::check_wave_certificate(p, cert);
    require(beta >= 0.0, "newton_branch: beta must be >= 0");
    require(grid.Nxi >= 4 && grid.Nxi % 2 == 0, "newton_branch: Nxi must be even and >= 4");
    NonlinearityF F = build_f(p);
    const int n = p.n();
    const int N = grid.Ny > 0 ? grid.Ny : std::max(64, 48 * n);
    require(N >= 16, "newton_branch: Ny >= 16 required");
    const int M = grid.Nxi / 2;
    const int ny = N - 1, nx = M + 1, nu = nx * ny;
    const double pi = std::numbers::pi;

    VectorXd y = cheb::nodes(N);
    MatrixXd D = cheb::diff_matrix(N);
    MatrixXd D2y = (D * D).block(1, 1, ny, ny);
    MatrixXd E = detail::even_fourier_d2(M);
    auto [alpha_n_sq, phi] = discrete_neutral_mode(F, N);

    VectorXd ps(ny), fs(ny), wy = cheb::cc_weights(N);
    for (int i = 0; i < ny; ++i) {
        ps[i] = psi_star(n, p.amplitude(), y[i + 1]);
        fs[i] = F(ps[i]);
    }
    // amplitude functional: (2/pi) int_0^pi int_0^1 w phi cos(xi)
    VectorXd cons(nu);
    for (int j = 0; j < nx; ++j) {
        double tw = (j == 0 || j == M) ? pi / (2.0 * M) : pi / M;
        for (int i = 0; i < ny; ++i) cons[j * ny + i] = (2.0 / pi) * tw * wy[i + 1] * phi[i + 1] * std::cos(pi * j / M);
    }

    // unknowns: w on the half-period interior grid, then alpha^2
    VectorXd w(nu);
    for (int j = 0; j < nx; ++j)
        for (int i = 0; i < ny; ++i) w[j * ny + i] = beta * phi[i + 1] * std::cos(pi * j / M);
    double a2 = alpha_n_sq;

    auto residual = [&](const VectorXd& u, double al2, VectorXd& Fv, VectorXd* Exi) {
        Eigen::Map<const MatrixXd> W(u.data(), ny, nx);  // column j = xi_j
        MatrixXd Wx = W * E.transpose();
        MatrixXd R = al2 * Wx + D2y * W;
        for (int j = 0; j < nx; ++j)
            for (int i = 0; i < ny; ++i) R(i, j) -= F(ps[i] + W(i, j)) - fs[i];
        Fv.resize(nu + 1);
        Fv.head(nu) = Eigen::Map<VectorXd>(R.data(), nu);
        Fv[nu] = cons.dot(u) - beta;
        if (Exi) *Exi = Eigen::Map<VectorXd>(Wx.data(), nu);
    };

    VectorXd Fv, Exi;
    residual(w, a2, Fv, &Exi);
    double res = Fv.lpNorm<Eigen::Infinity>();
    const double res0 = res;
    int it = 0;
    while (res > opt.tol && it < opt.max_iter) {
        MatrixXd J = MatrixXd::Zero(nu + 1, nu + 1);
        for (int j = 0; j < nx; ++j) {
            for (int q = 0; q < nx; ++q)
                if (E(j, q) != 0.0)
                    for (int i = 0; i < ny; ++i) J(j * ny + i, q * ny + i) += a2 * E(j, q);
            J.block(j * ny, j * ny, ny, ny) += D2y;
            for (int i = 0; i < ny; ++i) J(j * ny + i, j * ny + i) -= F.fprime(ps[i] + w[j * ny + i]);
        }
        J.col(nu).head(nu) = Exi;
        J.row(nu).head(nu) = cons.transpose();
        VectorXd step = J.partialPivLu().solve(-Fv);
        w += step.head(nu);
        a2 += step[nu];
        ++it;
        try {
            residual(w, a2, Fv, &Exi);
        } catch (const DomainError& e) {
            // the iterate left the range where f can be inverted
            throw ConvergenceError("newton_branch: diverged at beta=" + std::to_string(beta) + ": " + e.what());
        }
        double r_new = Fv.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(r_new) || r_new > 1e3 * std::max(res0, 1e-6))
            throw ConvergenceError("newton_branch: diverged at beta=" + std::to_string(beta) +
                                   ", last residual " + std::to_string(r_new));
        double snorm = step.lpNorm<Eigen::Infinity>();
        res = r_new;
        // rounding in the second-difference matrices bounds the attainable residual
        if (snorm < 1e-13 * (1.0 + w.lpNorm<Eigen::Infinity>() + std::abs(a2)) && res < opt.accept) break;
    }
    if (!(res < opt.accept))
        throw ConvergenceError("newton_branch: no convergence at beta=" + std::to_string(beta) + ", last residual " +
                               std::to_string(res));

    TravellingWave tw;
    tw.n = n;
    tw.A = p.amplitude();
    tw.beta = beta;
    tw.alpha_sq = a2;
    tw.alpha_n_sq = alpha_n_sq;
    tw.order = WaveOrder::newton;
    tw.iterations = it;
    tw.residual = res;
    tw.xi = detail::full_xi_grid(M);
    tw.y = y;
    MatrixXd half = MatrixXd::Zero(nx, N + 1);
    for (int j = 0; j < nx; ++j)
        for (int i = 0; i < ny; ++i) half(j, i + 1) = w[j * ny + i];
    tw.psi_rel.resize(2 * M + 1, N + 1);
    for (int j = 0; j <= 2 * M; ++j) {
        int jm = j <= M ? j : 2 * M - j;
        for (int i = 0; i <= N; ++i) tw.psi_rel(j, i) = psi_star(n, tw.A, y[i]) + half(jm, i);
    }
    tw.field = WaveField(n, tw.A, detail::cosine_harmonics(half));
    return tw;
}

// largest beta in {1e-2, 5e-3, ...} for which the corrector converges
inline TravellingWave max_newton_beta(const ShearProfile& p, const InstabilityCertificate& cert, WaveGrid grid = {},
                                      double beta_start = 1e-2, int halvings = 20) {
    double b = beta_start;
    std::string last;
    for (int h = 0; h <= halvings; ++h, b *= 0.5) {
        try {
            return newton_branch(p, cert, b, grid);
        } catch (const ConvergenceError& e) {
            last = e.what();
        }
    }
    throw ConvergenceError("max_newton_beta: no converged beta; " + last);
}

// max over the wave's own grid of |psi_a - psi_b|, psi_b evaluated through its spectral field
inline double wave_distance(const TravellingWave& a, const TravellingWave& b) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.xi.size(); ++i)
        for (Eigen::Index j = 0; j < a.y.size(); ++j) d = std::max(d, std::abs(a.psi_rel(i, j) - b(a.xi[i], a.y[j])));
    return d;
}

enum class CriticalKind { saddle, center, unclassified };

inline std::string to_string(CriticalKind k) {
    switch (k) {
        case CriticalKind::saddle: return "saddle";
        case CriticalKind::center: return "center";
        default: return "unclassified";
    }
}

struct CriticalPoint {
    double xi = 0.0;
    double y = 0.0;
    CriticalKind classification = CriticalKind::unclassified;
    double hessian_det = 0.0;
    double value = 0.0;
};

struct CriticalOptions {
    int seeds_xi = 16;
    int seeds_y = 24;
    double det_tol = 1e-10;
    double grad_tol = 1e-11;
    int max_iter = 60;
};

// interior critical points in [0, 2pi) x (0, 1), sorted by (xi, y)
inline std::vector<CriticalPoint> critical_points(const TravellingWave& w, const CriticalOptions& opt = {}) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<CriticalPoint> out;
    for (int a = 0; a < opt.seeds_xi; ++a) {
        for (int b = 1; b <= opt.seeds_y; ++b) {
            double x = two_pi * a / opt.seeds_xi, y = static_cast<double>(b) / (opt.seeds_y + 1);
            bool ok = false;
            for (int it = 0; it < opt.max_iter; ++it) {
                Eigen::Vector2d g = w.field.gradient(x, y);
                Eigen::Matrix2d H = w.field.hessian(x, y);
                double det = H.determinant();
                double scale = H.cwiseAbs().maxCoeff();
                if (!(std::abs(det) > 1e-14 * scale * scale)) break;  // flat direction: no isolated point here
                Eigen::Vector2d s = -H.inverse() * g;
                double len = s.norm();
                if (len > 0.1) s *= 0.1 / len;
                x += s[0];
                y += s[1];
                if (y <= 0.0 || y >= 1.0) break;
                if (len < 1e-13 && w.field.gradient(x, y).norm() < opt.grad_tol) {
                    ok = true;
                    break;
                }
            }
            if (!ok) continue;
            x = std::fmod(x, two_pi);
            if (x < 0.0) x += two_pi;
            if (two_pi - x < 1e-9) x = 0.0;
            bool dup = false;
            for (const auto& c : out) {
                double dx = std::abs(c.xi - x);
                dx = std::min(dx, two_pi - dx);
                if (dx < 1e-7 && std::abs(c.y - y) < 1e-7) dup = true;
            }
            if (dup) continue;
            CriticalPoint cp;
            cp.xi = x;
            cp.y = y;
            cp.hessian_det = w.field.hessian(x, y).determinant();
            cp.value = w(x, y);
            if (cp.hessian_det < -opt.det_tol) cp.classification = CriticalKind::saddle;
            else if (cp.hessian_det > opt.det_tol) cp.classification = CriticalKind::center;
            out.push_back(cp);
        }
    }
    std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return a.xi != b.xi ? a.xi < b.xi : a.y < b.y;
    });
    return out;
}

}  // namespace shearspec
