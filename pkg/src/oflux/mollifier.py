"""Compactly supported bump mollifier and its discrete convolutions.

The profile is phi(xi) = c exp(-1 / (1 - 4|xi|^2)) for |xi| < 1/2 and zero
outside, scaled as phi_eps(x) = eps^-3 phi(x / eps).  Sampled weights are
renormalized so that sum(w) * hx * hy * hz == 1.  The sampled analytic
gradient is antisymmetrized so it sums to zero and rescaled per axis so its
first moment is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError
from .field_core import Grid3, Region, TensorField, VectorField, _snap_out

__all__ = ["MollKernel", "make_kernel", "mollify", "grad_mollify", "double_mollify",
           "min_epsilon", "widen", "quadrature_samples"]

PROFILE = "bump exp(-1/(1-4|x|^2)), support |x| < 1/2"


@dataclass(frozen=True, eq=False)
class MollKernel:
    epsilon: float
    grid: Grid3
    weights: np.ndarray        # cube of kernel values phi_eps over integer offsets
    grad_weights: np.ndarray   # (3, cube) samples of grad phi_eps
    norm_const: float          # factor applied to the raw samples
    radius: tuple              # half-width of the cube in nodes per axis

    @property
    def offsets(self) -> np.ndarray:
        """Integer offsets (K, 3) of the nonzero weights, in a fixed order."""
        return self._flat()[0]

    def _flat(self):
        cache = self.__dict__.get("_flat_cache")
        if cache is None:
            r = self.radius
            idx = np.nonzero(self.weights > 0)
            offs = np.stack([idx[0] - r[0], idx[1] - r[1], idx[2] - r[2]], axis=1).astype(np.int64)
            w = self.weights[idx] * self.grid.cell_volume
            g = np.stack([gw[idx] for gw in self.grad_weights]) * self.grid.cell_volume
            cache = (np.ascontiguousarray(offs), np.ascontiguousarray(w), np.ascontiguousarray(g))
            self.__dict__["_flat_cache"] = cache
        return cache

    def to_dict(self) -> dict:
        return {"profile": PROFILE, "epsilon": self.epsilon, "norm_const": self.norm_const,
                "radius_nodes": list(self.radius), "n_offsets": int(self.offsets.shape[0])}


def min_epsilon(grid: Grid3) -> float:
    """Smallest admissible epsilon: four nodes across the support on the coarsest axis."""
    return 4 * max(grid.spacing)


def make_kernel(epsilon: float, grid: Grid3) -> MollKernel:
    epsilon = float(epsilon)
    emin = min_epsilon(grid)
    if not epsilon >= emin * (1 - 1e-12):
        raise DomainError(f"epsilon = {epsilon:.6g} is under-resolved; the minimum for this grid is {emin:.6g}")
    if epsilon / 2 >= grid.lz:
        raise DomainError(f"epsilon/2 = {epsilon / 2:.6g} must be below Lz = {grid.lz}")
    h = grid.spacing
    rad = tuple(int(math.ceil(epsilon / (2 * hh))) for hh in h)
    axes = [np.arange(-r, r + 1) * hh / epsilon for r, hh in zip(rad, h)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    s = 1.0 - 4.0 * (X * X + Y * Y + Z * Z)
    inside = s > 0
    sp = np.where(inside, s, 1.0)
    prof = np.where(inside, np.exp(-1.0 / sp), 0.0)
    raw = prof / epsilon ** 3
    norm = 1.0 / (raw.sum() * grid.cell_volume)
    w = raw * norm
    # evenness holds exactly since the samples only see squared offsets
    dfac = np.where(inside, -8.0 * prof / (sp * sp), 0.0) * norm / epsilon ** 4
    g = np.stack([dfac * X, dfac * Y, dfac * Z])
    g = 0.5 * (g - g[:, ::-1, ::-1, ::-1])
    # first moments: sum y_i d_i phi h^3 = -1, so linear fields differentiate exactly
    for i, ax in enumerate((X, Y, Z)):
        m = (ax * epsilon * g[i]).sum() * grid.cell_volume
        g[i] *= -1.0 / m
    w.flags.writeable = False
    g.flags.writeable = False
    return MollKernel(epsilon, grid, w, g, float(norm), rad)


def widen(support: Region, grid: Grid3, amount: float) -> Region:
    if support.kind == "full":
        return support
    lo, hi = support.bounds(grid)
    return Region.from_bounds(lo - amount, hi + amount, grid)


def _k_range(grid: Grid3, region: Region | None) -> tuple[int, int]:
    if region is None:
        return 0, grid.nz
    mask = region.node_mask(grid)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return 0, 0
    return int(idx[0]), int(idx[-1]) + 1


def _restrict(support: Region, region: Region | None, grid: Grid3) -> Region:
    if region is None:
        return support
    lo, hi = support.bounds(grid)
    rlo, rhi = region.bounds(grid)
    return Region.from_bounds(max(lo, rlo), min(hi, rhi), grid)


def quadrature_samples(c: np.ndarray, support: Region, grid: Grid3) -> np.ndarray:
    """Samples as seen by the convolution sum.

    The sum over source nodes is a trapezoid rule in x3 over the support
    interval: a node where the support ends (a jump of the zero-extended field,
    or the slab end) enters with half its value.  This keeps the discrete
    mollifier self-adjoint for the support-aware inner product.
    """
    lo, hi = _snap_out(support.bounds(grid), grid)
    if hi <= lo:
        return c
    out = c
    for end in (lo, hi):
        k = int(round(end / grid.hz)) + grid.nz_half
        if np.any(c[..., k]):
            if out is c:
                out = c.copy()
            out[..., k] *= 0.5
    return out


def _convolve(c: np.ndarray, offs, w, k_lo, k_hi, increment=False) -> np.ndarray:
    flat = c.reshape(-1, *c.shape[-3:])
    out = np.zeros(flat.shape)
    active = [i for i in range(flat.shape[0]) if np.any(flat[i])]
    if active and k_hi > k_lo:
        src = np.ascontiguousarray(flat[active])
        part = np.zeros(src.shape)
        fn = _kernels.conv_increment if increment else _kernels.conv
        fn(src, offs, w, part, k_lo, k_hi)
        out[active] = part
    return out.reshape(c.shape)


def _check_grid(f, k: MollKernel) -> None:
    if f.grid != k.grid:
        raise ShapeError("field and kernel live on different grids")


def mollify(f, k: MollKernel, out_region: Region | None = None):
    """J_eps f by direct convolution; the support tag widens by eps/2.

    out_region limits the output nodes that are computed; the returned support
    tag is narrowed accordingly.
    """
    _check_grid(f, k)
    offs, w, _ = k._flat()
    k_lo, k_hi = _k_range(f.grid, out_region)
    out = _convolve(quadrature_samples(f.comps, f.support, f.grid), offs, w, k_lo, k_hi)
    support = _restrict(widen(f.support, f.grid, k.epsilon / 2), out_region, f.grid)
    if isinstance(f, TensorField):
        return TensorField(f.grid, out, support)
    return VectorField(f.grid, out, support, f.time)


def grad_mollify(f: VectorField, k: MollKernel, form: str = "direct",
                 out_region: Region | None = None) -> TensorField:
    """Entry (i, j) is d_i (J_eps f)_j, the convolution of f_j with d_i phi_eps.

    form="increment" convolves f(x - y) - f(x) instead; the two agree because
    the gradient weights sum to zero.
    """
    _check_grid(f, k)
    if form not in ("direct", "increment"):
        raise ValueError(f"unknown form {form!r}")
    offs, _, g = k._flat()
    k_lo, k_hi = _k_range(f.grid, out_region)
    src = quadrature_samples(f.comps, f.support, f.grid)
    out = np.stack([_convolve(src, offs, np.ascontiguousarray(g[i]), k_lo, k_hi,
                              increment=(form == "increment")) for i in range(3)])
    support = _restrict(widen(f.support, f.grid, k.epsilon / 2), out_region, f.grid)
    return TensorField(f.grid, out, support)


def double_mollify(f, k: MollKernel, out_region: Region | None = None):
    """J_eps J_eps f; the support widens by eps in total."""
    inner = None
    if out_region is not None:
        lo, hi = out_region.bounds(f.grid)
        inner = Region.from_bounds(lo - k.epsilon / 2, hi + k.epsilon / 2, f.grid)
    return mollify(mollify(f, k, inner), k, out_region)
