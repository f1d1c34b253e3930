// Rayleigh mode at alpha_1 / 2 and a coarse walk along the unstable branch of U_1.

#include <cstdio>

#include "shearspec.hpp"

using namespace shearspec;

int main() {
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    auto s = solve_rayleigh(U, 0.5 * cert.alpha_n, {0.5, 0.1});
    if (!s.mode) return 1;
    std::printf("alpha = %.6f  c = %.12f + %.12f i  (N=%d, |c_N - c_2N| = %.1e)\n", s.mode->alpha, s.mode->c.real(),
                s.mode->c.imag(), s.mode->N, s.mode->refinement_delta);
    auto br = continue_branch(U, cert, 0.25, 40);
    std::printf("%10s %14s\n", "alpha", "Im c");
    for (const auto& b : br.samples) std::printf("%10.4f %14.8f\n", b.alpha, b.c.imag());
    std::printf("max alpha Im c = %.6f\n", br.max_growth_rate);
}
