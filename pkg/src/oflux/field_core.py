"""Grids, fields, regions and the quadrature every other module builds on.

The computational domain is the torus T^2 (period 2*pi in x1 and x2) times the
truncated interval [-Lz, Lz] in x3.  Fields are stored as float64 arrays of
shape (3, nx, ny, nz) with nz = 2*nz_half + 1; the plane x3 = 0 is the node
with index nz_half.

Integrals use the rectangle rule in x1, x2 and piecewise-linear (hat)
integration in x3 over the exact region interval.  When the interval ends fall
on nodes this is the trapezoid rule, so the boundary node x3 = 0 carries hz/2
on each side and integrals over the full slab split exactly into the two
halves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "Grid3", "Region", "VectorField", "TensorField", "TimeSeries",
    "z_weights", "integrate", "inner_product", "lp_norm", "shift",
    "divergence", "gradient", "weak_div_defect", "time_weights",
    "time_derivative", "vector_gradient", "pointwise_norm", "FULL", "HALF_PLUS",
]

# relative tolerance (in units of hz) used when deciding whether a node sits
# on a region end
_NODE_TOL = 1e-9


@dataclass(frozen=True)
class Grid3:
    nx: int
    ny: int
    nz_half: int
    lz: float

    def __post_init__(self):
        for name in ("nx", "ny", "nz_half"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not (self.lz > 0 and math.isfinite(self.lz)):
            raise DomainError(f"Lz must be positive, got {self.lz!r}")
        object.__setattr__(self, "lz", float(self.lz))

    @property
    def hx(self) -> float:
        return 2 * math.pi / self.nx

    @property
    def hy(self) -> float:
        return 2 * math.pi / self.ny

    @property
    def hz(self) -> float:
        return self.lz / self.nz_half

    @property
    def nz(self) -> int:
        return 2 * self.nz_half + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.hx, self.hy, self.hz)

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy * self.hz

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.hy

    @property
    def z(self) -> np.ndarray:
        return np.arange(-self.nz_half, self.nz_half + 1) * self.hz

    @property
    def k0(self) -> int:
        """Index of the boundary plane x3 = 0."""
        return self.nz_half

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays of shapes (nx,1,1), (1,ny,1), (1,1,nz)."""
        return (self.x[:, None, None], self.y[None, :, None], self.z[None, None, :])

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "nz_half": self.nz_half, "lz": self.lz}


@dataclass(frozen=True)
class Region:
    """A slab region described by its x3 extent.

    kind is one of "full", "half_plus", "above" (x3 > a) or "strip" (a < x3 < b).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("full", "half_plus", "above", "strip"):
            raise DomainError(f"unknown region kind {self.kind!r}")
        if self.kind == "strip" and not self.a < self.b:
            raise DomainError(f"strip needs a < b, got ({self.a}, {self.b})")

    @classmethod
    def full(cls) -> "Region":
        return cls("full")

    @classmethod
    def half_plus(cls) -> "Region":
        return cls("half_plus")

    @classmethod
    def above(cls, s: float) -> "Region":
        return cls("above", float(s))

    @classmethod
    def strip(cls, a: float, b: float) -> "Region":
        return cls("strip", float(a), float(b))

    @classmethod
    def from_bounds(cls, lo: float, hi: float, grid: Grid3) -> "Region":
        """Smallest named region with x3 extent [lo, hi], clipped to the slab."""
        tol = _NODE_TOL * grid.hz
        lo, hi = max(lo, -grid.lz), min(hi, grid.lz)
        if hi < lo:
            hi = lo
        top = hi >= grid.lz - tol
        if top and lo <= -grid.lz + tol:
            return cls.full()
        if top and abs(lo) <= tol:
            return cls.half_plus()
        if top:
            return cls.above(lo)
        if hi - lo <= tol:
            # degenerate support: keep a tiny strip around the point
            return cls.strip(lo - tol, lo + tol)
        return cls.strip(lo, hi)

    def bounds(self, grid: Grid3) -> tuple[float, float]:
        if self.kind == "full":
            return (-grid.lz, grid.lz)
        if self.kind == "half_plus":
            return (0.0, grid.lz)
        if self.kind == "above":
            return (self.a, grid.lz)
        return (self.a, self.b)

    def node_mask(self, grid: Grid3) -> np.ndarray:
        """Boolean mask over x3 nodes lying in the closed region."""
        return _mask(grid, *self.bounds(grid))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


def _mask(grid: Grid3, lo: float, hi: float) -> np.ndarray:
    tol = _NODE_TOL * grid.hz
    z = grid.z
    return (z >= lo - tol) & (z <= hi + tol)


FULL = Region.full()
HALF_PLUS = Region.half_plus()


def _snap_out(bounds: tuple[float, float], grid: Grid3) -> tuple[float, float]:
    lo, hi = bounds
    h = grid.hz
    lo = math.floor(lo / h + _NODE_TOL) * h
    hi = math.ceil(hi / h - _NODE_TOL) * h
    return max(lo, -grid.lz), min(hi, grid.lz)


def _checked_bounds(region: Region, grid: Grid3) -> tuple[float, float]:
    lo, hi = region.bounds(grid)
    tol = _NODE_TOL * grid.hz
    if lo < -grid.lz - tol or hi > grid.lz + tol or lo >= grid.lz:
        raise DomainError(
            f"region {region.kind}({region.a}, {region.b}) leaves the slab [-{grid.lz}, {grid.lz}]")
    return max(lo, -grid.lz), min(hi, grid.lz)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid3
    comps: np.ndarray
    support: Region = FULL
    time: float = 0.0
    decay_tol: float | None = None

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=np.float64)
        if c.shape != (3,) + self.grid.shape:
            raise ShapeError(f"expected shape {(3,) + self.grid.shape}, got {c.shape}")
        _check_support(c, self.support, self.grid)
        if self.decay_tol is not None:
            _check_decay(c, self.grid, self.decay_tol)
        if c.flags.writeable:
            c = c.view()
            c.flags.writeable = False
        object.__setattr__(self, "comps", c)
        object.__setattr__(self, "time", float(self.time))

    def replace(self, **kw) -> "VectorField":
        return replace(self, **kw)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.comps[i]


@dataclass(frozen=True, eq=False)
class TensorField:
    grid: Grid3
    comps: np.ndarray
    support: Region = FULL

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=np.float64)
        if c.shape != (3, 3) + self.grid.shape:
            raise ShapeError(f"expected shape {(3, 3) + self.grid.shape}, got {c.shape}")
        if c.flags.writeable:
            c = c.view()
            c.flags.writeable = False
        object.__setattr__(self, "comps", c)

    def transpose(self) -> "TensorField":
        return TensorField(self.grid, np.ascontiguousarray(self.comps.transpose(1, 0, 2, 3, 4)),
                           self.support)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: tuple
    snapshots: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        snaps = tuple(self.snapshots)
        if not snaps:
            raise DomainError("a time series needs at least one snapshot")
        if len(times) != len(snaps):
            raise ShapeError("times and snapshots differ in length")
        if times[0] != 0.0:
            raise DomainError("time series must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("times must be strictly increasing")
        g = snaps[0].grid
        for t, s in zip(times, snaps):
            if s.grid != g:
                raise ShapeError("snapshots live on different grids")
            if s.time != t:
                raise DomainError(f"snapshot time label {s.time} does not match {t}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", snaps)

    @property
    def grid(self) -> Grid3:
        return self.snapshots[0].grid

    def __len__(self) -> int:
        return len(self.snapshots)

    def upto(self, t: float) -> "TimeSeries":
        """Sub-series on [0, t]; t must be one of the snapshot times."""
        if t not in self.times:
            raise DomainError(f"t = {t} is not a snapshot time")
        n = self.times.index(t) + 1
        return TimeSeries(self.times[:n], self.snapshots[:n])

    @classmethod
    def steady(cls, field: VectorField, times: Sequence[float]) -> "TimeSeries":
        return cls(tuple(times), tuple(field.replace(time=t) for t in times))


def _check_support(c: np.ndarray, support: Region, grid: Grid3) -> None:
    if support.kind == "full":
        return
    lo, hi = _snap_out(support.bounds(grid), grid)
    outside = ~_mask(grid, lo, hi)
    if outside.any() and np.any(c[..., outside] != 0.0):
        raise DomainError(f"field has nonzero values outside its {support.kind} support")


def _check_decay(c: np.ndarray, grid: Grid3, tol: float) -> None:
    outer = np.abs(grid.z) >= 0.9 * grid.lz - _NODE_TOL * grid.hz
    if outer.any():
        worst = float(np.abs(c[..., outer]).max())
        if worst > tol:
            raise DomainError(
                f"field is {worst:.3e} in the outer 10% of the slab, above the decay tolerance {tol:.1e}")


# -- quadrature ---------------------------------------------------------------

def _hat_cdf(t: np.ndarray) -> np.ndarray:
    # integral of the unit hat centred at 0 from -inf to t
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0, 0.5 * (1 + t) ** 2, 1 - 0.5 * (1 - t) ** 2)


def z_weights(grid: Grid3, lo: float, hi: float) -> np.ndarray:
    """x3 quadrature weights integrating the piecewise-linear interpolant over [lo, hi]."""
    lo, hi = max(lo, -grid.lz), min(hi, grid.lz)
    w = np.zeros(grid.nz)
    if hi <= lo:
        return w
    k = np.arange(-grid.nz_half, grid.nz_half + 1)
    return grid.hz * (_hat_cdf(hi / grid.hz - k) - _hat_cdf(lo / grid.hz - k))


def _interval(grid: Grid3, region: Region, supports: Iterable[Region]) -> tuple[float, float]:
    lo, hi = _checked_bounds(region, grid)
    for s in supports:
        slo, shi = _snap_out(s.bounds(grid), grid)
        lo, hi = max(lo, slo), min(hi, shi)
    return lo, hi


def integrate(f: np.ndarray, grid: Grid3, region: Region = FULL,
              supports: Iterable[Region] = ()) -> float:
    """Integral of scalar samples f over region (intersected with the given supports)."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != grid.shape:
        raise ShapeError(f"expected samples of shape {grid.shape}, got {f.shape}")
    lo, hi = _interval(grid, region, supports)
    w = z_weights(grid, lo, hi)
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        return 0.0
    k0, k1 = nz[0], nz[-1] + 1
    prof = f[:, :, k0:k1].sum(axis=(0, 1))
    return float(np.sum(prof * w[k0:k1]) * grid.hx * grid.hy)


def _same_grid(f, g) -> None:
    if f.grid != g.grid:
        raise ShapeError("fields live on different grids")


def inner_product(f, g, region: Region = FULL) -> float:
    """<f, g> over region: sum_i f_i g_i (vectors) or sum_ij F_ij G_ij (tensors)."""
    _same_grid(f, g)
    if f.comps.shape != g.comps.shape:
        raise ShapeError("inner product needs fields of the same kind")
    lo, hi = _interval(f.grid, region, (f.support, g.support))
    w = z_weights(f.grid, lo, hi)
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        return 0.0
    k0, k1 = nz[0], nz[-1] + 1
    a = f.comps[..., k0:k1]
    b = g.comps[..., k0:k1]
    prod = (a * b).reshape(-1, *a.shape[-3:]).sum(axis=0)
    prof = prod.sum(axis=(0, 1))
    return float(np.sum(prof * w[k0:k1]) * f.grid.hx * f.grid.hy)


def pointwise_norm(f: VectorField) -> np.ndarray:
    c = f.comps
    return np.sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])


def lp_norm(f: VectorField, p: float, region: Region = FULL) -> float:
    """(int |f|^p)^(1/p) with |f| the Euclidean pointwise norm; p = inf gives the max over region nodes."""
    grid = f.grid
    if p == math.inf:
        _checked_bounds(region, grid)
        lo, hi = _interval(grid, region, (f.support,))
        if hi < lo:
            return 0.0
        mask = _mask(grid, lo, hi)
        if not mask.any():
            return 0.0
        return float(pointwise_norm(f)[..., mask].max())
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    a = pointwise_norm(f)
    val = integrate(a * a if p == 2 else a ** p, grid, region, (f.support,))
    return val ** (1.0 / p)


# -- shifts and differences ---------------------------------------------------

def _shift_array(c: np.ndarray, offset: Sequence[int]) -> np.ndarray:
    a1, a2, a3 = (int(v) for v in offset)
    out = c
    if a1 or a2:
        out = np.roll(out, (-a1, -a2), axis=(-3, -2))
    if a3:
        nz = c.shape[-1]
        res = np.zeros_like(c)
        if a3 > 0:
            if a3 < nz:
                res[..., : nz - a3] = out[..., a3:]
        else:
            if -a3 < nz:
                res[..., -a3:] = out[..., : nz + a3]
        out = res
    elif out is c:
        out = c.copy()
    return out


def shift(f: VectorField, offset: Sequence[int]) -> VectorField:
    """Translate: shift(f, a)(x) = f(x + a*h), periodic in x1, x2 and zero-filled in x3."""
    grid = f.grid
    a3 = int(offset[2])
    if abs(a3) * grid.hz >= 2 * grid.lz:
        raise DomainError(f"x3 offset {a3} exceeds the slab height")
    comps = _shift_array(f.comps, offset)
    if a3 == 0:
        support = f.support
    else:
        lo, hi = f.support.bounds(grid)
        support = Region.from_bounds(lo - a3 * grid.hz, hi - a3 * grid.hz, grid)
    return VectorField(grid, comps, support, f.time)


def _d1(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(a, -1, axis=axis) - np.roll(a, 1, axis=axis)) / (2 * h)


def _d3(a: np.ndarray, h: float) -> np.ndarray:
    return np.gradient(a, h, axis=-1, edge_order=2)


def divergence(f: VectorField) -> np.ndarray:
    """Second-order central differences; one-sided second order at x3 = +-Lz."""
    g = f.grid
    c = f.comps
    return _d1(c[0], g.hx, 0) + _d1(c[1], g.hy, 1) + _d3(c[2], g.hz)


def gradient(phi: np.ndarray, grid: Grid3) -> np.ndarray:
    """Gradient of scalar samples with the divergence stencils, shape (3, nx, ny, nz)."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != grid.shape:
        raise ShapeError(f"expected samples of shape {grid.shape}, got {phi.shape}")
    return np.stack([_d1(phi, grid.hx, 0), _d1(phi, grid.hy, 1), _d3(phi, grid.hz)])


def vector_gradient(f: VectorField) -> np.ndarray:
    """Finite-difference gradient tensor with entry (i, j) = d_i f_j, shape (3, 3, nx, ny, nz)."""
    g = f.grid
    c = f.comps
    return np.stack([_d1(c, g.hx, 1), _d1(c, g.hy, 2), _d3(c, g.hz)])


def weak_div_defect(f: VectorField, test_fns: Sequence[np.ndarray],
                    region: Region = HALF_PLUS) -> float:
    """max over test scalars phi of |<f, grad phi>| / ||grad phi||_L2, both over region."""
    if len(test_fns) == 0:
        raise DomainError("weak_div_defect needs at least one test function")
    grid = f.grid
    worst = 0.0
    for phi in test_fns:
        gphi = VectorField(grid, gradient(phi, grid))
        den = math.sqrt(inner_product(gphi, gphi, region))
        if den == 0.0:
            continue
        worst = max(worst, abs(inner_product(f, gphi, region)) / den)
    return worst


# -- time discretization --------------------------------------------------------

def time_weights(times: Sequence[float]) -> np.ndarray:
    """Trapezoid weights; a single snapshot gets weight 1 (per unit time)."""
    t = np.asarray(times, dtype=np.float64)
    if t.size == 1:
        return np.ones(1)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def time_derivative(values: Sequence[np.ndarray], times: Sequence[float]) -> list[np.ndarray]:
    """Centred differences in time, first-order one-sided at both ends.

    Paired with time_weights this telescopes exactly: sum_k w_k D a_k = a_N - a_0.
    """
    n = len(values)
    if n < 2:
        return [np.zeros_like(values[0])]
    t = [float(s) for s in times]
    out = []
    for k in range(n):
        lo, hi = max(k - 1, 0), min(k + 1, n - 1)
        out.append((values[hi] - values[lo]) / (t[hi] - t[lo]))
    return out
