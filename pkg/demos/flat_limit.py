"""Shrinking the Gaussian shape parameter.

Direct Gaussian interpolation loses accuracy as eps -> 0 because the
alternant matrix becomes numerically singular. The stable basis spans the
same space through well-scaled functions, so its element operators glide
smoothly onto the polynomial ones.
"""

import numpy as np

from rbffr import BasisSpec, build_operators, node_set
from rbffr.rbf import evaluation_condition

pts = node_set("legendre", 5)
poly = build_operators(BasisSpec.polynomial(pts))

print(" eps      cond(direct)  cond(stable)  |D_ga - D_poly|")
for eps in (1.0, 0.3, 0.1, 0.03, 0.01, 0.001):
    ga = build_operators(BasisSpec.rbf_ga(pts, eps))
    gap = np.abs(ga.D - poly.D).max()
    print(f"{eps:6.3f}  {evaluation_condition(pts, eps, 'direct'):12.3e}"
          f"  {evaluation_condition(pts, eps, 'stable'):12.3e}  {gap:.3e}")

print("\nThe direct condition number grows like eps^-(2n-2); the stable one stays modest.")
