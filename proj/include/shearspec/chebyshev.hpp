#pragma once

// Chebyshev-Gauss-Lobatto collocation on [0,1].
// Nodes are y_j = (1 - cos(pi j/N))/2, j = 0..N (ascending), i.e. x_j = cos(pi j/N) with y = (1-x)/2.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "shearspec/error.hpp"

namespace shearspec::cheb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd nodes(int N) {
    require(N >= 2, "chebyshev grid needs N >= 2");
    VectorXd y(N + 1);
    for (int j = 0; j <= N; ++j) y[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * j / N));
    // exact symmetry y_{N-j} = 1 - y_j
    for (int j = 0; j <= N / 2; ++j) y[N - j] = 1.0 - y[j];
    y[0] = 0.0;
    y[N] = 1.0;
    return y;
}

// first-derivative matrix on [0,1]
inline MatrixXd diff_matrix(int N) {
    require(N >= 2, "chebyshev grid needs N >= 2");
    const double pi = std::numbers::pi;
    VectorXd x(N + 1), c(N + 1);
    for (int j = 0; j <= N; ++j) {
        x[j] = std::sin(pi * (N - 2.0 * j) / (2.0 * N));  // = cos(pi j/N), symmetric rounding
        c[j] = ((j == 0 || j == N) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
    }
    MatrixXd D = MatrixXd::Zero(N + 1, N + 1);
    for (int i = 0; i <= N; ++i) {
        for (int j = 0; j <= N; ++j) {
            if (i != j) D(i, j) = (c[i] / c[j]) / (x[i] - x[j]);
        }
    }
    // negative-sum trick for the diagonal
    for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
    return -2.0 * D;  // d/dy = -2 d/dx
}

// Clenshaw-Curtis weights on [0,1]; they sum to 1
inline VectorXd cc_weights(int N) {
    require(N >= 2, "chebyshev grid needs N >= 2");
    const double pi = std::numbers::pi;
    VectorXd w = VectorXd::Zero(N + 1);
    for (int j = 0; j <= N; ++j) {
        double theta = pi * j / N;
        double s = 0.0;
        for (int k = 1; k <= N / 2; ++k) {
            double b = (2 * k == N) ? 1.0 : 2.0;
            s += b * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
        }
        double cj = (j == 0 || j == N) ? 1.0 : 2.0;
        w[j] = cj / N * (1.0 - s);
    }
    return 0.5 * w;  // [-1,1] -> [0,1]
}

// values at the nodes -> coefficients a_k of sum a_k T_k(x), x = 1 - 2y
inline MatrixXd values_to_coeffs(int N) {
    const double pi = std::numbers::pi;
    MatrixXd C(N + 1, N + 1);
    for (int k = 0; k <= N; ++k) {
        for (int j = 0; j <= N; ++j) {
            double cj = (j == 0 || j == N) ? 0.5 : 1.0;
            C(k, j) = 2.0 / N * cj * std::cos(pi * k * j / N);
        }
    }
    C.row(0) *= 0.5;
    C.row(N) *= 0.5;
    return C;
}

template <class Vec>
Vec coeffs_of(const Vec& values) {
    const int N = static_cast<int>(values.size()) - 1;
    return values_to_coeffs(N) * values;
}

// cumulative integral from y=0 at the nodes: (J f)(y_j) = int_0^{y_j} f
inline MatrixXd integration_matrix(int N) {
    MatrixXd C = values_to_coeffs(N);
    // integrate in x: F = sum b_k T_k with dF/dx = sum a_k T_k, coefficients up to N+1
    MatrixXd B = MatrixXd::Zero(N + 2, N + 1);
    for (int k = 0; k <= N; ++k) {
        if (k == 0) {
            B(1, 0) += 1.0;
        } else if (k == 1) {
            B(2, 1) += 0.25;
        } else {
            B(k + 1, k) += 0.5 / (k + 1);
            B(k - 1, k) -= 0.5 / (k - 1);
        }
    }
    // evaluate at x_j = cos(pi j/N); T_k(x_j) = cos(k pi j/N); T_k(1) = 1
    MatrixXd T(N + 1, N + 2);
    for (int j = 0; j <= N; ++j)
        for (int k = 0; k <= N + 1; ++k) T(j, k) = std::cos(std::numbers::pi * k * j / N);
    MatrixXd F = T * B * C;  // F(x_j)
    // int_0^y f dy' = (F(1) - F(x)) / 2, F(1) is row 0
    MatrixXd J(N + 1, N + 1);
    for (int j = 0; j <= N; ++j) J.row(j) = 0.5 * (F.row(0) - F.row(j));
    return J;
}

// A Chebyshev series on [0,1], evaluated anywhere with derivatives.
class Series {
public:
    Series() = default;
    explicit Series(VectorXd coeffs) : a_(std::move(coeffs)) {}

    static Series from_values(const VectorXd& values) { return Series(coeffs_of(values)); }

    const VectorXd& coeffs() const { return a_; }
    int degree() const { return static_cast<int>(a_.size()) - 1; }

    // coefficients of d/dy
    Series derivative() const {
        const int n = degree();
        if (n < 1) return Series(VectorXd::Zero(1));
        VectorXd b = VectorXd::Zero(n + 1);
        // d/dx recurrence: b_{k-1} = b_{k+1} + 2k a_k
        for (int k = n; k >= 1; --k) {
            double next = (k + 1 <= n) ? b[k + 1] : 0.0;
            b[k - 1] = next + 2.0 * k * a_[k];
        }
        b[0] *= 0.5;
        b *= -2.0;  // chain rule
        return Series(b.head(n));
    }

    double operator()(double y) const {
        double x = 1.0 - 2.0 * y;
        double b1 = 0.0, b2 = 0.0;
        for (int k = degree(); k >= 1; --k) {
            double b0 = 2.0 * x * b1 - b2 + a_[k];
            b2 = b1;
            b1 = b0;
        }
        return x * b1 - b2 + a_[0];
    }

private:
    VectorXd a_ = VectorXd::Zero(1);
};

// barycentric interpolation from nodes of grid N to arbitrary points
inline MatrixXd interp_matrix(int N, const VectorXd& pts) {
    VectorXd y = nodes(N);
    VectorXd w(N + 1);
    for (int j = 0; j <= N; ++j) w[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
    MatrixXd P = MatrixXd::Zero(pts.size(), N + 1);
    for (int i = 0; i < pts.size(); ++i) {
        int hit = -1;
        double s = 0.0;
        for (int j = 0; j <= N; ++j) {
            double d = pts[i] - y[j];
            if (d == 0.0) {
                hit = j;
                break;
            }
            P(i, j) = w[j] / d;
            s += P(i, j);
        }
        if (hit >= 0) {
            P.row(i).setZero();
            P(i, hit) = 1.0;
        } else {
            P.row(i) /= s;
        }
    }
    return P;
}

}  // namespace shearspec::cheb

namespace shearspec::cheb {

// max |coefficient| over the top 10% of modes relative to the largest coefficient
template <class Vec>
double tail_ratio(const Vec& values) {
    const int N = static_cast<int>(values.size()) - 1;
    MatrixXd C = values_to_coeffs(N);
    Eigen::VectorXd mag = (C * values.real()).cwiseAbs() + (C * values.imag()).cwiseAbs();
    int start = N - std::max(1, N / 10);
    double lead = mag.maxCoeff();
    if (lead == 0.0) return 0.0;
    return mag.segment(start, N + 1 - start).maxCoeff() / lead;
}

}  // namespace shearspec::cheb
