"""Batch checks of the reflection, extension and mollifier identities.

Each check returns a Check record; a suite passes when every record does.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .field_core import FULL, HALF_PLUS, Grid3, Region, VectorField, inner_product, lp_norm
from .mollifier import MollKernel, make_kernel, min_epsilon, mollify
from .reflectex import extend, reflect, truncated_reflect, zero_extend

__all__ = ["Check", "random_field", "random_half_field", "lemma_suite", "LEMMA_TOL"]

LEMMA_TOL = 1e-11


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name: str, value: float, tol: float) -> Check:
    value = float(value)
    return Check(name, value, float(tol), bool(value <= tol))


def random_field(grid: Grid3, seed: int) -> VectorField:
    """Gaussian noise on every node of the slab."""
    rng = np.random.default_rng(seed)
    return VectorField(grid, rng.standard_normal((3,) + grid.shape))


def random_half_field(grid: Grid3, seed: int) -> VectorField:
    """Gaussian noise on x3 >= 0 with zero normal component on the boundary."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((3,) + grid.shape)
    c[..., :grid.k0] = 0.0
    c[2, :, :, grid.k0] = 0.0
    return VectorField(grid, c, HALF_PLUS)


def extension_checks(g: VectorField) -> list[Check]:
    """||g_E||_p = 2^(1/p) ||g||_p up to the boundary-node weight."""
    grid = g.grid
    g0 = zero_extend(g)
    gE = extend(g, boundary_tol=np.inf).field
    out = []
    for p in (1, 2, 3):
        src = lp_norm(g0, p, HALF_PLUS)
        ext = lp_norm(gE, p, FULL)
        want = 2 ** (1 / p) * src
        rel = abs(ext - want) / want if want > 0 else abs(ext)
        out.append(_check(f"extension_norm_factor_p{p}", rel, grid.hz / grid.lz))
    return out


def reflection_checks(f: VectorField, v: VectorField, delta: float, tol: float = LEMMA_TOL) -> list[Check]:
    fr = reflect(f)
    out = [_check("involution", np.abs(reflect(fr).comps - f.comps).max(), 0.0)]
    for p in (1, 2, 3):
        out.append(_check(f"isometry_p{p}", abs(lp_norm(fr, p) - lp_norm(f, p)), tol))
    strip = Region.strip(-delta, delta)
    lhs = inner_product(f, reflect(v), strip)
    rhs = inner_product(fr, v, strip)
    out.append(_check("adjoint_symmetry", abs(lhs - rhs), tol))
    return out


def kernel_checks(f: VectorField, g: VectorField, k: MollKernel, tol: float = LEMMA_TOL,
                  boundary_tol: float = 1e-10) -> list[Check]:
    """Reflection commutes with J, and J(g_E) has no normal component on x3 = 0."""
    grid = f.grid
    a = mollify(reflect(f), k).comps
    b = reflect(mollify(f, k)).comps
    out = [_check("kernel_reflection_commutation", np.abs(a - b).max(), tol)]
    res = extend(g, boundary_tol)
    jn = np.abs(mollify(res.field, k).comps[2, :, :, grid.k0]).max()
    out.append(_check("boundary_normal_vanishing", jn, tol))
    # J(g_E)_3 = 0 on x3 = 0 holds for any input by oddness, so the input's own
    # normal trace is what decides whether the boundary condition is met
    gn = np.abs(g.comps[2, :, :, grid.k0]).max()
    out.append(_check("boundary_normal_input", gn, boundary_tol))
    return out


def truncation_checks(u: VectorField, v: VectorField, gamma: float, k: MollKernel,
                      tol: float = LEMMA_TOL) -> list[Check]:
    if not k.epsilon < gamma:
        raise DomainError(f"truncated-reflection check needs epsilon < gamma, got {k.epsilon} >= {gamma}")
    d1 = gamma / 2
    s1 = Region.strip(-d1, d1)
    lhs = inner_product(u, truncated_reflect(v, gamma), s1)
    rhs = inner_product(truncated_reflect(u, gamma), v, s1)
    out = [_check("truncated_adjoint", abs(lhs - rhs), tol)]
    d2 = gamma - k.epsilon
    mask = Region.strip(-d2, d2).node_mask(u.grid)
    a = mollify(truncated_reflect(v, gamma), k).comps[..., mask]
    b = truncated_reflect(mollify(v, k), gamma).comps[..., mask]
    out.append(_check("truncated_commutation", np.abs(a - b).max(), tol))
    return out


def lemma_suite(g: VectorField, seed: int = 0, epsilon: float | None = None,
                gamma: float | None = None, tol: float = LEMMA_TOL,
                boundary_tol: float = 1e-10) -> list[Check]:
    """All identities for one half-space snapshot g and a seeded partner field.

    g is checked through its extension; the partner is Gaussian noise so the
    identities are exercised on data with no structure of its own.
    """
    grid = g.grid
    eps = min_epsilon(grid) if epsilon is None else float(epsilon)
    gamma = 0.75 * grid.lz if gamma is None else float(gamma)
    k = make_kernel(eps, grid)
    f = extend(g, boundary_tol=np.inf).field
    v = random_field(grid, seed)
    checks = extension_checks(g)
    checks += reflection_checks(f, v, gamma / 2, tol)
    checks += kernel_checks(f, g, k, tol, boundary_tol)
    checks += truncation_checks(f, v, gamma, k, tol)
    return checks
