// Leading-order and Newton-corrected cat's-eye waves; writes streamlines to cats_eye.svg.

#include <cstdio>

#include "shearspec.hpp"
#include "shearspec/io.hpp"

using namespace shearspec;

int main() {
    auto U = ShearProfile::oscillatory(1, 0.06);
    auto cert = certify_instability(U);
    for (double beta : {1e-2, 1e-3}) {
        auto w = newton_branch(U, cert, beta);
        std::printf("beta = %.0e  alpha^2 = %.10f  (alpha_n^2 = %.10f, %d Newton steps)\n", beta, w.alpha_sq, w.alpha_n_sq,
                    w.iterations);
    }
    auto w = newton_branch(U, cert, 1e-2);
    for (const auto& c : critical_points(w))
        std::printf("%-7s xi = %.6f  y = %.6f\n", to_string(c.classification).c_str(), c.xi, c.y);
    std::vector<double> levels;
    for (int k = -6; k <= 6; ++k) levels.push_back(psi_star(1, 0.06, 0.5) + 2e-3 * k);
    io::write_text("cats_eye.svg", io::streamlines_svg(streamlines(w, levels), "cat's eyes, beta = 1e-2"));
    std::printf("wrote cats_eye.svg\n");
}
