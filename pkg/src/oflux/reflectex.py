"""Odd reflection across x3 = 0, zero extension, and the boundary-preserving extension."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .field_core import FULL, HALF_PLUS, Region, VectorField, lp_norm

__all__ = ["ExtensionResult", "reflect", "zero_extend", "extend", "truncated_reflect"]

_SIGN = np.array([1.0, 1.0, -1.0])[:, None, None, None]


@dataclass(frozen=True, eq=False)
class ExtensionResult:
    field: VectorField
    source_norm_l2: float
    extended_norm_l2: float
    warnings: tuple = field(default=())


def _reflect_support(support: Region, grid) -> Region:
    if support.kind == "full":
        return support
    lo, hi = support.bounds(grid)
    return Region.from_bounds(-hi, -lo, grid)


def reflect(f: VectorField) -> VectorField:
    """f_R(x1, x2, x3) = (f1, f2, -f3)(x1, x2, -x3), node by node."""
    comps = f.comps[..., ::-1] * _SIGN
    return VectorField(f.grid, comps, _reflect_support(f.support, f.grid), f.time)


def zero_extend(g: VectorField) -> VectorField:
    """View g as a field on the whole slab that vanishes for x3 < 0."""
    k0 = g.grid.k0
    if np.any(g.comps[..., :k0] != 0.0):
        raise DomainError("zero_extend: input has nonzero samples below x3 = 0")
    return VectorField(g.grid, g.comps, HALF_PLUS, g.time)


def extend(g: VectorField, boundary_tol: float = 1e-10) -> ExtensionResult:
    """g_E = g + g_R off the boundary and (g1, g2, 0) on x3 = 0."""
    g0 = zero_extend(g)
    k0 = g.grid.k0
    comps = g0.comps + g0.comps[..., ::-1] * _SIGN
    comps[:2, :, :, k0] = g0.comps[:2, :, :, k0]
    comps[2, :, :, k0] = 0.0
    warnings = []
    worst = float(np.abs(g0.comps[2, :, :, k0]).max())
    if worst > boundary_tol:
        warnings.append(f"normal component reaches {worst:.3e} on x3 = 0 (tolerance {boundary_tol:.1e})")
    ext = VectorField(g.grid, comps, FULL, g.time)
    return ExtensionResult(ext, lp_norm(g0, 2, HALF_PLUS), lp_norm(ext, 2, FULL), tuple(warnings))


def truncated_reflect(v: VectorField, gamma: float) -> VectorField:
    """v_r = 1_{x3 > -gamma} v_R with a node-sharp cut."""
    grid = v.grid
    if not 0 < gamma < grid.lz:
        raise DomainError(f"gamma must lie in (0, Lz = {grid.lz}), got {gamma}")
    r = reflect(v)
    keep = grid.z > -gamma + 1e-9 * grid.hz
    comps = np.where(keep, r.comps, 0.0)
    lo, hi = r.support.bounds(grid)
    support = Region.from_bounds(max(lo, -gamma), hi, grid)
    return VectorField(grid, comps, support, v.time)
