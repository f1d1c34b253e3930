#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

namespace shearspec::quad {

// Gauss-Legendre nodes/weights on [a,b] (Golub-Welsch)
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int m, double a = -1.0, double b = 1.0) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) {
        double beta = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Eigen::VectorXd x = es.eigenvalues();
    Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    x = 0.5 * (b - a) * x.array() + 0.5 * (b + a);
    w *= 0.5 * (b - a);
    return {x, w};
}

}  // namespace shearspec::quad
