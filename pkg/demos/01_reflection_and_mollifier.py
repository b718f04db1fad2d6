"""Extend a half-slab shear flow across the wall and watch the mollifier converge.

The tangential components are reflected evenly and the normal one oddly, so a
profile with zero wall slope extends to a C^2 field and J_eps u_E - u shrinks
like eps^2.  A profile with a wall slope only gives a kink after reflection.

    python demos/01_reflection_and_mollifier.py
"""
import math

import numpy as np

from oflux.field_core import FULL, HALF_PLUS, Grid3, VectorField, lp_norm
from oflux.fitting import loglog_fit
from oflux.mollifier import make_kernel, mollify
from oflux.reflectex import extend, zero_extend

grid = Grid3(32, 32, 64, 4 * math.pi)
s = 2.4


def profile_field(f1, f2):
    c = np.zeros((3,) + grid.shape)
    z = np.maximum(grid.z, 0.0)
    c[0] = np.where(grid.z >= 0, f1(z), 0.0)
    c[1] = np.where(grid.z >= 0, f2(z), 0.0)
    return VectorField(grid, c, HALF_PLUS)


gauss = lambda z: np.exp(-z * z / (2 * s * s))
flat_wall = profile_field(gauss, lambda z: 0.5 * np.cos(z / s) * gauss(z))
sloped_wall = profile_field(lambda z: (1 + z / s) * gauss(z), lambda z: 0.3 * gauss(z))

for name, u in (("zero wall slope", flat_wall), ("nonzero wall slope", sloped_wall)):
    res = extend(u)
    print(f"\n{name}: ||u_E||_2 / ||u||_2 = {lp_norm(res.field, 2, FULL) / lp_norm(u, 2, HALF_PLUS):.6f}"
          f"  (sqrt 2 = {math.sqrt(2):.6f})")
    u0 = zero_extend(u)
    eps = [0.8, 1.6, 3.2, 6.4]
    errs = []
    for e in eps:
        j = mollify(res.field, make_kernel(e, grid), HALF_PLUS)
        errs.append(lp_norm(VectorField(grid, j.comps - u0.comps), 2, HALF_PLUS))
        print(f"  eps = {e:4.1f}   ||J u_E - u||_2 = {errs[-1]:.4e}")
    print(f"  fitted order {loglog_fit(eps, errs).slope:.2f}")
