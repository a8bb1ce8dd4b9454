"""Wave propagation properties of a single element type.

Each Bloch wavenumber k gives a small matrix whose eigenvalues are the
frequencies the scheme supports. The physical mode is the one that best
matches the true wave; its real part measures dispersion and its imaginary
part measures growth or decay.
"""

import numpy as np

from rbffr import BasisSpec, FourierConfig, build_operators, dispersion_dissipation, node_set
from rbffr.analysis import combined_sweep, khat_grid

grid = khat_grid(16)
for label, spec in (
    ("polynomial", BasisSpec.polynomial(node_set("legendre", 3))),
    ("gaussian eps=0.5", BasisSpec.rbf_ga(node_set("legendre", 3), 0.5)),
    ("gaussian eps=1.5", BasisSpec.rbf_ga(node_set("legendre", 3), 1.5)),
):
    cfg = FourierConfig(build_operators(spec), k_hat=grid)
    c = dispersion_dissipation(cfg).physical_c_hat
    G = np.array([r.G for r in combined_sweep(cfg, [1.0])])
    print(f"\n{label}")
    print("  k_hat/pi   Re(c)/k_hat   Im(c)        G(t=1)")
    for kh, ci, g in list(zip(grid, c, G))[::3]:
        print(f"  {kh / np.pi:7.4f}   {ci.real / kh:10.5f}   {ci.imag: .3e}   {g:.5f}")
    print(f"  largest growth rate {c.imag.max():.3e}")

print("\nWith eps = 1.5 some wavenumbers grow, so that element is not stable under upwinding.")
