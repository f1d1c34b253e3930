// Instability certificates of U_n for a few amplitudes: lambda_1, the explicit bound and alpha_n.

#include <cstdio>

#include "shearspec.hpp"

using namespace shearspec;

int main() {
    std::printf("%3s %7s %10s %14s %14s %10s\n", "n", "A", "delta", "lambda1", "bound", "alpha_n");
    for (int n : {1, 2, 3})
        for (double A : {0.045, 0.06, 0.075}) {
            auto U = ShearProfile::oscillatory(n, A);
            auto cert = certify_instability(U);
            std::printf("%3d %7.3f %10.6f %14.6f %14.6f %10.6f\n", n, A, U.delta(), cert.lambda1,
                        lambda1_bound(n, U.delta()), cert.alpha_n);
        }
}
