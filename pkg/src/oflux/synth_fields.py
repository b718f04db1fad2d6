"""Synthetic inputs with known ground truth.

Every generator returns fields on the half slab (zero for x3 < 0) multiplied
by a smooth envelope that is exactly one near the boundary and exactly zero in
the outer tenth of the slab.  Divergence-freeness is structural: each velocity
component only depends on coordinates other than its own.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .field_core import (HALF_PLUS, Grid3, TimeSeries, VectorField, _d1, _d3,
                         divergence)

__all__ = [
    "smoothstep", "envelope", "FieldSpec", "gen_shear", "gen_lacunary",
    "lacunary_coefficients", "max_mode_count", "gen_gradient_bump", "bump",
    "gen_layered_translation", "gen_boundary_flux", "gen_time_series", "gen_test_functions",
    "modulation", "build_series",
]

DECAY_TOL = 1e-12


def _psi(t):
    tp = np.where(t > 0, t, 1.0)
    return np.where(t > 0, np.exp(-1.0 / tp), 0.0)


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    a = _psi(t)
    b = _psi(1.0 - t)
    return a / (a + b)


def envelope(z, lz: float, plateau: float = 0.6, cutoff: float = 0.9):
    """1 on [0, plateau*Lz], smooth decay to exactly 0 at cutoff*Lz, 0 below x3 = 0."""
    if not 0 < plateau < cutoff <= 0.9:
        raise DomainError(f"envelope needs 0 < plateau < cutoff <= 0.9, got {plateau}, {cutoff}")
    z = np.asarray(z, dtype=np.float64)
    e = 1.0 - smoothstep((z - plateau * lz) / ((cutoff - plateau) * lz))
    return np.where(z >= 0, e, 0.0)


def _env(grid: Grid3, env) -> np.ndarray:
    if env is None:
        return envelope(grid.z, grid.lz)
    if callable(env):
        return np.where(grid.z >= 0, np.asarray(env(grid.z), dtype=np.float64), 0.0)
    return envelope(grid.z, grid.lz, *env)


def _field(grid: Grid3, comps: np.ndarray, time: float = 0.0) -> VectorField:
    comps[..., : grid.k0] = 0.0
    return VectorField(grid, comps, HALF_PLUS, time, decay_tol=DECAY_TOL)


def gen_shear(f_profile: Callable, g_profile: Callable, grid: Grid3, env=None) -> VectorField:
    """Steady shear (f(x3) e(x3), g(x3) e(x3), 0), an exact steady Euler solution."""
    e = _env(grid, env)
    z = grid.z
    comps = np.zeros((3,) + grid.shape)
    comps[0] = (np.asarray(f_profile(z), dtype=np.float64) * e)[None, None, :]
    comps[1] = (np.asarray(g_profile(z), dtype=np.float64) * e)[None, None, :]
    u = _field(grid, comps)
    assert not np.any(divergence(u))
    return u


def max_mode_count(grid: Grid3) -> int:
    """Largest M with the top mode 2^(M-1) below Nyquist in x1, x2 and x3."""
    lim = min(grid.nx / 2, grid.ny / 2, grid.nz_half)
    m = 0
    while 2 ** m < lim:
        m += 1
    return m


def lacunary_coefficients(alpha: float, mode_count: int, seed: int) -> dict:
    """Signs and phases for both components, drawn in a fixed order from the seed."""
    rng = np.random.default_rng(seed)
    out = {}
    for comp in ("u1", "u2"):
        out[comp] = {
            "a": rng.choice([-1.0, 1.0], mode_count),
            "b": rng.choice([-1.0, 1.0], mode_count),
            "theta": rng.uniform(0, 2 * math.pi, mode_count),
            "phi": rng.uniform(0, 2 * math.pi, mode_count),
        }
    out["amplitude"] = 2.0 ** (-alpha * np.arange(mode_count))
    return out


def gen_lacunary(alpha: float, mode_count: int, seed: int, grid: Grid3, env=None) -> VectorField:
    """Weierstrass-type field with Hoelder exponent alpha in x1, x2 and x3.

    u1(x2, x3) = sum_m 2^(-alpha m) [a_m cos(2^m x2 + theta_m) + b_m cos(2^m pi x3 / Lz + phi_m)] e(x3),
    u2(x1, x3) likewise with independent draws, u3 = 0.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if mode_count < 1:
        raise DomainError(f"modeCount must be >= 1, got {mode_count}")
    mmax = max_mode_count(grid)
    if mode_count > mmax:
        raise DomainError(f"modeCount {mode_count} exceeds the Nyquist limit; max admissible modeCount is {mmax}")
    co = lacunary_coefficients(alpha, mode_count, seed)
    amp = co["amplitude"]
    e = _env(grid, env)
    z = grid.z
    comps = np.zeros((3,) + grid.shape)
    for c, axis, coords in ((0, 1, grid.y), (1, 0, grid.x)):
        d = co[f"u{c + 1}"]
        horiz = np.zeros(coords.size)
        vert = np.zeros(z.size)
        for m in range(mode_count):
            horiz += amp[m] * d["a"][m] * np.cos(2 ** m * coords + d["theta"][m])
            vert += amp[m] * d["b"][m] * np.cos(2 ** m * math.pi * z / grid.lz + d["phi"][m])
        if axis == 1:
            comps[c] = (horiz[None, :, None] + vert[None, None, :]) * e
        else:
            comps[c] = (horiz[:, None, None] + vert[None, None, :]) * e
    return _field(grid, comps)


def bump(grid: Grid3, center=(math.pi, math.pi, None), width: float | None = None) -> np.ndarray:
    """Smooth compactly supported scalar bump inside the upper half slab."""
    zc = center[2] if center[2] is not None else 0.4 * grid.lz
    width = width if width is not None else 0.3 * grid.lz
    X, Y, Z = grid.mesh()
    dx = np.angle(np.exp(1j * (X - center[0])))
    dy = np.angle(np.exp(1j * (Y - center[1])))
    s = 1.0 - (dx * dx + dy * dy + (Z - zc) ** 2) / width ** 2
    return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def gen_gradient_bump(grid: Grid3, center=(math.pi, math.pi, None), width: float | None = None) -> VectorField:
    """grad(bump) from the analytic derivative; curl free and far from divergence free."""
    zc = center[2] if center[2] is not None else 0.4 * grid.lz
    width = width if width is not None else 0.3 * grid.lz
    if zc - width <= 0 or zc + width >= 0.9 * grid.lz:
        raise DomainError("bump must sit strictly inside (0, 0.9 Lz)")
    X, Y, Z = grid.mesh()
    dx = np.angle(np.exp(1j * (X - center[0])))
    dy = np.angle(np.exp(1j * (Y - center[1])))
    dz = Z - zc
    s = 1.0 - (dx * dx + dy * dy + dz * dz) / width ** 2
    inside = s > 0
    sp = np.where(inside, s, 1.0)
    b = np.where(inside, np.exp(-1.0 / sp), 0.0)
    fac = np.where(inside, b / (sp * sp) * (-2.0 / width ** 2), 0.0)
    comps = np.zeros((3,) + grid.shape)
    comps[0] = fac * dx
    comps[1] = fac * dy
    comps[2] = fac * dz
    return _field(grid, comps)


def gen_layered_translation(grid: Grid3, times: Sequence[float], amplitude: float = 1.0,
                            speed: float = 1.0, env=None) -> TimeSeries:
    """Exact unsteady Euler solution with zero pressure.

    u = (A(x3) sin(x2 - V(x3) t), V(x3), 0): every horizontal layer carries a
    profile that is advected along x2 by its own constant speed.
    """
    e = _env(grid, env)
    z = grid.z
    a = amplitude * e * np.cos(math.pi * z / grid.lz)
    v = speed * e * (0.5 + np.cos(2 * math.pi * z / grid.lz) ** 2)
    snaps = []
    for t in times:
        comps = np.zeros((3,) + grid.shape)
        comps[0] = a[None, None, :] * np.sin(grid.y[None, :, None] - v[None, None, :] * t)
        comps[1] = v[None, None, :]
        snaps.append(_field(grid, comps, t))
    return TimeSeries(tuple(times), tuple(snaps))


def _envelope_slope(z, lz: float, plateau: float, cutoff: float) -> np.ndarray:
    """d/dz of the envelope continued evenly to z < 0."""
    w = (cutoff - plateau) * lz
    t = (np.abs(z) - plateau * lz) / w
    a, b = _psi(t), _psi(1.0 - t)
    ta = np.where(t > 0, t, 1.0)
    tb = np.where(t < 1, 1.0 - t, 1.0)
    da, db = a / (ta * ta), b / (tb * tb)
    den = np.where(a + b > 0, a + b, 1.0)
    ds = (da * b + a * db) / (den * den)
    return -np.sign(z) * ds / w


def gen_boundary_flux(grid: Grid3, plateau: float = 0.6, cutoff: float = 0.9) -> VectorField:
    """(sin(x1) e'(x3), 0, -cos(x1) e(x3)), analytically solenoidal, crossing x3 = 0.

    e is the envelope; u3 = -cos(x1) on the boundary, so the odd extension
    jumps there.  Meant as a negative control.
    """
    z = grid.z
    e = envelope(np.abs(z), grid.lz, plateau, cutoff)
    de = _envelope_slope(z, grid.lz, plateau, cutoff)
    comps = np.zeros((3,) + grid.shape)
    comps[0] = np.sin(grid.x)[:, None, None] * de[None, None, :]
    comps[2] = -np.cos(grid.x)[:, None, None] * e[None, None, :]
    return _field(grid, comps)


def modulation(name: str, param: float = 1.0) -> Callable[[float], float]:
    """Named time modulations a(t) used by time series specs."""
    if name == "constant":
        return lambda t: 1.0
    if name == "linear":
        return lambda t: 1.0 + param * t
    if name == "sine":
        return lambda t: 1.0 + 0.5 * math.sin(param * t)
    raise DomainError(f"unknown modulation {name!r}")


def gen_time_series(base: VectorField, mod: Callable[[float], float], times: Sequence[float]) -> TimeSeries:
    """Snapshots a(t) * base; a = 1 gives a steady series."""
    snaps = []
    for t in times:
        a = float(mod(t))
        comps = base.comps if a == 1.0 else a * base.comps
        snaps.append(VectorField(base.grid, comps, base.support, t))
    return TimeSeries(tuple(times), tuple(snaps))


def gen_test_functions(grid: Grid3, count: int, seed: int, times: Sequence[float]) -> list[TimeSeries]:
    """Random admissible test fields psi(x, t) for the weak formulation.

    psi = (D2 chi, -D1 chi, 0) + (D3 xi, 0, -D1 xi) with the same difference
    stencils as divergence(), so the discrete divergence cancels identically.
    chi and xi decay before |x3| = 0.9 Lz; xi also vanishes near x3 = 0 so that
    psi3 = 0 on the boundary.
    """
    rng = np.random.default_rng(seed)
    X, Y, Z = grid.mesh()
    lz = grid.lz
    out = []
    for _ in range(count):
        chi_par = rng.normal(size=(3, 4))
        xi_par = rng.normal(size=(3, 4))
        kx, ky = rng.integers(0, 3, size=2), rng.integers(0, 3, size=2)
        rate = rng.normal(size=2)
        chi_z = envelope(np.abs(Z), lz, 0.3, 0.8) * np.cos(math.pi * Z / lz * rng.uniform(0.5, 1.5))
        xi_z = smoothstep((Z - 0.1 * lz) / (0.2 * lz)) * envelope(Z, lz, 0.5, 0.8)
        snaps = []
        for t in times:
            chi = np.zeros(grid.shape)
            xi = np.zeros(grid.shape)
            for p, q in ((chi_par, chi), (xi_par, xi)):
                horiz = (p[0, 0] + p[0, 1] * np.cos(kx[0] * X + p[0, 2]) * np.cos(ky[0] * Y + p[0, 3])
                         + p[1, 0] * np.sin((kx[1] + 1) * X + p[1, 1]) + p[1, 2] * np.cos((ky[1] + 1) * Y + p[1, 3]))
                q += horiz * (1.0 + p[2, 0] * math.sin(rate[0] * t) + 0.1 * p[2, 1] * t)
            chi *= chi_z
            xi *= xi_z
            comps = np.zeros((3,) + grid.shape)
            comps[0] = _d1(chi, grid.hy, 1) + _d3(xi, grid.hz)
            comps[1] = -_d1(chi, grid.hx, 0)
            comps[2] = -_d1(xi, grid.hx, 0)
            snaps.append(VectorField(grid, comps, time=t))
        out.append(TimeSeries(tuple(times), tuple(snaps)))
    return out


@dataclass
class FieldSpec:
    """Serializable description of a synthetic input series."""

    kind: str = "shear"              # one of KINDS
    alpha: float = 0.5
    mode_count: int = 4
    seed: int = 0
    plateau: float = 0.6
    cutoff: float = 0.9
    f_coeffs: list = field(default_factory=lambda: [1.0, 0.5])
    g_coeffs: list = field(default_factory=lambda: [0.0, 0.3])
    modulation: str = "constant"
    modulation_param: float = 1.0
    amplitude: float = 1.0
    speed: float = 1.0

    KINDS = ("shear", "lacunary", "gradient_bump", "time_modulated_shear", "layered_translation",
             "boundary_flux")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown field kind {self.kind!r}; expected one of {self.KINDS}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode_count < 1:
            raise DomainError(f"modeCount must be >= 1, got {self.mode_count}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def _cos_series(coeffs, lz):
    coeffs = [float(c) for c in coeffs]
    return lambda z: sum(c * np.cos(n * math.pi * z / lz) for n, c in enumerate(coeffs))


def build_series(spec: FieldSpec, grid: Grid3, times: Sequence[float]) -> TimeSeries:
    """Realize a FieldSpec on a grid as a time series."""
    env = (spec.plateau, spec.cutoff)
    if spec.kind == "layered_translation":
        return gen_layered_translation(grid, times, spec.amplitude, spec.speed, env)
    if spec.kind in ("shear", "time_modulated_shear"):
        base = gen_shear(_cos_series(spec.f_coeffs, grid.lz), _cos_series(spec.g_coeffs, grid.lz), grid, env)
    elif spec.kind == "boundary_flux":
        base = gen_boundary_flux(grid, *env)
    elif spec.kind == "lacunary":
        base = gen_lacunary(spec.alpha, spec.mode_count, spec.seed, grid, env)
    else:
        base = gen_gradient_bump(grid)
    mod_name = spec.modulation
    if spec.kind == "time_modulated_shear" and mod_name == "constant":
        mod_name = "linear"
    return gen_time_series(base, modulation(mod_name, spec.modulation_param), times)
