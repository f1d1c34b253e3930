// 3D growing mode of U_1 + eps sin(pi y) cos(2 pi z) on a small strip grid.

#include <cstdio>

#include "shearspec.hpp"

using namespace shearspec;

int main() {
    auto U = ShearProfile::oscillatory(1, 0.06);
    const double a0 = 0.5 * certify_instability(U).alpha_n;
    auto t = persistence_sweep(U, default_gshape(), {0.0, 1e-3, 1e-2}, a0, StripGrid{64, 8});
    std::printf("c0 = %.10f + %.10f i   grid (%d, %d)\n", t.c0.real(), t.c0.imag(), t.grid.Ny, t.grid.Nz);
    for (const auto& r : t.rows)
        std::printf("eps = %.0e  c = %.10f + %.10f i  defect = %.3e  invariants %.1e  [%s]\n", r.eps, r.c.real(),
                    r.c.imag(), r.defect, r.max_invariant, r.method.c_str());
}
