// The Orr-Sommerfeld eigenvalue approaching the inviscid one as R grows.

#include <cstdio>

#include "shearspec.hpp"

using namespace shearspec;

int main() {
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    const double a0 = 0.5 * cert.alpha_n;
    auto c0 = solve_rayleigh(U, a0, {0.5, 0.1}).mode->c;
    auto t = track_inviscid_limit(U, a0, c0, {1e4, 1e5, 1e6});
    std::printf("c0 = %.10f + %.10f i\n", c0.real(), c0.imag());
    for (const auto& p : t.path)
        std::printf("R = %8.0e  N = %4d  c = %.10f + %.10f i  defect = %.3e\n", p.R, p.N, p.c.real(), p.c.imag(), p.defect);
    std::printf("log-log slope %.3f\n", t.slope);
}
