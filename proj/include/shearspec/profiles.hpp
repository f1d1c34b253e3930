#pragma once

// Base shear flows U(y) on [0,1] with U(0)=0, U(1)=1.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "shearspec/chebyshev.hpp"
#include "shearspec/error.hpp"

namespace shearspec {

enum class ProfileKind { linear, oscillatory, sine_series, tabulated };

inline std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::linear: return "linear";
        case ProfileKind::oscillatory: return "oscillatory";
        case ProfileKind::sine_series: return "sine-series";
        case ProfileKind::tabulated: return "tabulated";
    }
    return "?";
}

struct AmplitudeWindow {
    double A = 0.0;
    double delta = 1.0;  // 1 - 4 pi A
    bool in_window = false;
};

inline AmplitudeWindow amplitude_window(double A) {
    const double pi = std::numbers::pi;
    AmplitudeWindow w;
    w.A = A;
    w.delta = 1.0 - 4.0 * pi * A;
    w.in_window = A > 1.0 / (8.0 * pi) && A < 1.0 / (4.0 * pi);
    return w;
}

struct DriftParams {
    double epsilon = 0.0;
    double t = 0.0;
};

class ShearProfile {
public:
    static constexpr int max_analytic_order = 6;

    static ShearProfile linear() { return ShearProfile(ProfileKind::linear); }

    static ShearProfile oscillatory(int n, double A) {
        require(n >= 1, "oscillatory profile needs n >= 1");
        require(std::isfinite(A), "amplitude must be finite");
        ShearProfile p(ProfileKind::oscillatory);
        p.n_ = n;
        p.window_ = amplitude_window(A);
        return p;
    }

    // U = y + sum_m coeffs[m-1] sin(m pi y)
    static ShearProfile sine_series(std::vector<double> coeffs) {
        for (double a : coeffs) require(std::isfinite(a), "sine coefficients must be finite");
        ShearProfile p(ProfileKind::sine_series);
        p.coeffs_ = std::move(coeffs);
        return p;
    }

    // values at the Chebyshev-Gauss-Lobatto nodes of [0,1]
    static ShearProfile tabulated(std::vector<double> samples) {
        require(samples.size() >= 3, "tabulated profile needs at least 3 samples");
        require(std::abs(samples.front()) < 1e-12 && std::abs(samples.back() - 1.0) < 1e-12,
                "tabulated profile must satisfy U(0)=0, U(1)=1");
        samples.front() = 0.0;
        samples.back() = 1.0;
        ShearProfile p(ProfileKind::tabulated);
        p.samples_ = samples;
        Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(samples.data(), samples.size());
        p.series_[0] = cheb::Series::from_values(v);
        for (int k = 1; k <= max_analytic_order; ++k) p.series_[k] = p.series_[k - 1].derivative();
        return p;
    }

    ProfileKind kind() const { return kind_; }
    int n() const { return n_; }
    double amplitude() const { return window_.A; }
    double delta() const { return window_.delta; }
    const AmplitudeWindow& window() const { return window_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    const std::vector<double>& samples() const { return samples_; }

    int max_order() const { return kind_ == ProfileKind::tabulated ? 2 : max_analytic_order; }

    // highest sine wavenumber present (in units of pi); drives grid sizing
    int max_wavenumber() const {
        switch (kind_) {
            case ProfileKind::oscillatory: return 4 * n_;
            case ProfileKind::sine_series: return static_cast<int>(coeffs_.size());
            case ProfileKind::tabulated: return static_cast<int>(samples_.size()) / 2;
            default: return 0;
        }
    }

    // oscillation index used for the N >= 64 n sizing rule
    int index() const { return std::max(1, (max_wavenumber() + 3) / 4); }

    double operator()(double y, int order = 0) const { return eval(y, order); }

    double eval(double y, int order = 0) const {
        if (order < 0 || order > max_order())
            throw DomainError("unsupported derivative order " + std::to_string(order) + " for " + to_string(kind_) +
                              " profile");
        return derivative(y, order);
    }

    // Like eval but allows orders up to 6 for every kind; tabulated profiles differentiate
    // their Chebyshev series (used internally for Taylor expansions of Q).
    double derivative(double y, int order) const {
        if (!(y >= 0.0 && y <= 1.0)) throw DomainError("profile evaluated outside [0,1]: y=" + std::to_string(y));
        if (order < 0 || order > max_analytic_order) throw DomainError("derivative order out of range");
        if (order == 0 && (y == 0.0 || y == 1.0)) return y;  // Couette values, exactly
        const double pi = std::numbers::pi;
        double base = order == 0 ? y : (order == 1 ? 1.0 : 0.0);
        switch (kind_) {
            case ProfileKind::linear: return base;
            case ProfileKind::oscillatory: {
                double k = 4.0 * n_ * pi;
                return base + window_.A / n_ * sin_derivative(k, y, order);
            }
            case ProfileKind::sine_series: {
                double s = base;
                for (std::size_t m = 0; m < coeffs_.size(); ++m)
                    s += coeffs_[m] * sin_derivative((m + 1) * pi, y, order);
                return s;
            }
            case ProfileKind::tabulated: {
                return series_[order](y);
            }
        }
        return 0.0;
    }

private:
    explicit ShearProfile(ProfileKind k) : kind_(k) {}

    // d^order/dy^order sin(k y)
    static double sin_derivative(double k, double y, int order) {
        double kp = std::pow(k, order);
        switch (order % 4) {
            case 0: return kp * std::sin(k * y);
            case 1: return kp * std::cos(k * y);
            case 2: return -kp * std::sin(k * y);
            default: return -kp * std::cos(k * y);
        }
    }

    ProfileKind kind_;
    int n_ = 0;
    AmplitudeWindow window_ = amplitude_window(0.0);
    std::vector<double> coeffs_;
    std::vector<double> samples_;
    cheb::Series series_[max_analytic_order + 1];
};

// Roots of U'' in (0,1) where U'' changes sign, sorted.
inline std::vector<double> inflection_points(const ShearProfile& p, double tol = 1e-12) {
    std::vector<double> roots;
    switch (p.kind()) {
        case ProfileKind::linear: return roots;
        case ProfileKind::oscillatory: {
            // zeros of sin(4 n pi y)
            const int m = 4 * p.n();
            if (p.amplitude() == 0.0) return roots;
            for (int k = 1; k < m; ++k) roots.push_back(static_cast<double>(k) / m);
            return roots;
        }
        case ProfileKind::sine_series: {
            int nonzero = 0, which = 0;
            for (std::size_t m = 0; m < p.coeffs().size(); ++m)
                if (p.coeffs()[m] != 0.0) {
                    ++nonzero;
                    which = static_cast<int>(m) + 1;
                }
            if (nonzero == 0) return roots;
            if (nonzero == 1) {
                for (int k = 1; k < which; ++k) roots.push_back(static_cast<double>(k) / which);
                return roots;
            }
            break;
        }
        case ProfileKind::tabulated: break;
    }
    // bracketing + bisection on a dense sample of U''
    const int M = 64 * std::max(1, p.max_wavenumber()) + 256;
    auto f = [&](double y) { return p.eval(y, 2); };
    double scale = 0.0;
    std::vector<double> fs(M + 1);
    for (int i = 0; i <= M; ++i) {
        fs[i] = f(static_cast<double>(i) / M);
        scale = std::max(scale, std::abs(fs[i]));
    }
    if (scale == 0.0) return roots;
    const double zero = 1e-13 * scale;
    int i = 1;
    while (i <= M) {
        double a = static_cast<double>(i - 1) / M, b = static_cast<double>(i) / M;
        double fa = fs[i - 1], fb = fs[i];
        if (std::abs(fb) <= zero) {
            if (i == M) break;
            // root at a sample: check sign change across it
            int j = i + 1;
            while (j < M && std::abs(fs[j]) <= zero) ++j;
            if (fa * fs[j] < 0.0 && j == i + 1) roots.push_back(b);
            i = j + 1;
            continue;
        }
        if (fa * fb < 0.0) {
            while (b - a > tol) {
                double c = 0.5 * (a + b), fc = f(c);
                if ((fc < 0.0) == (fa < 0.0)) {
                    a = c;
                    fa = fc;
                } else {
                    b = c;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        ++i;
    }
    return roots;
}

// Exact heat-equation decay of each sine coefficient: a_m -> a_m exp(-eps (m pi)^2 t).
inline ShearProfile drift(const ShearProfile& p, const DriftParams& d) {
    require(d.epsilon >= 0.0 && d.t >= 0.0, "drift needs epsilon >= 0 and t >= 0");
    const double pi = std::numbers::pi;
    switch (p.kind()) {
        case ProfileKind::linear: return p;
        case ProfileKind::oscillatory: {
            double k = 4.0 * p.n() * pi;
            return ShearProfile::oscillatory(p.n(), p.amplitude() * std::exp(-d.epsilon * k * k * d.t));
        }
        case ProfileKind::sine_series: {
            std::vector<double> c = p.coeffs();
            for (std::size_t m = 0; m < c.size(); ++m) {
                double k = (m + 1) * pi;
                c[m] *= std::exp(-d.epsilon * k * k * d.t);
            }
            return ShearProfile::sine_series(c);
        }
        case ProfileKind::tabulated: break;
    }
    throw DomainError("drift is defined for oscillatory and sine-series profiles only");
}

// minimum of U' on a dense grid (monotonicity check)
inline double min_slope(const ShearProfile& p) {
    if (p.kind() == ProfileKind::oscillatory) return 1.0 - 4.0 * std::numbers::pi * std::abs(p.amplitude());
    const int M = 64 * std::max(1, p.max_wavenumber()) + 512;
    double m = p.eval(0.0, 1);
    for (int i = 1; i <= M; ++i) m = std::min(m, p.eval(static_cast<double>(i) / M, 1));
    return m;
}

inline Eigen::VectorXd sample(const ShearProfile& p, const Eigen::VectorXd& y, int order = 0) {
    Eigen::VectorXd v(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) v[i] = p.eval(y[i], order);
    return v;
}

}  // namespace shearspec
