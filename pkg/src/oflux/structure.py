"""Third-order structure functions, the bulk condition, boundary moduli and strip norms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .field_core import Region, TimeSeries, time_weights, z_weights
from .fitting import loglog_fit
from .reflectex import extend, zero_extend

__all__ = ["structure_function", "bulk_condition_study", "StructureReport",
           "boundary_modulus", "ModulusTable", "strip_norm_study", "StripTable",
           "SLOPE_THRESHOLD", "RESIDUAL_THRESHOLD"]

SLOPE_THRESHOLD = 0.1
RESIDUAL_THRESHOLD = 0.1
_CHUNK = 16   # x1 planes processed at once


def _offset_length(grid, offset) -> float:
    return math.sqrt(sum((int(a) * h) ** 2 for a, h in zip(offset, grid.spacing)))


def _series_upto(u: TimeSeries, t: float | None) -> TimeSeries:
    return u if t is None else u.upto(t)


def _cube_increment_profile(c: np.ndarray, offset, k_lo: int, k_hi: int) -> np.ndarray:
    """sum over x1, x2 of |c(x + y) - c(x)|^3 for x3 nodes k_lo..k_hi-1."""
    a1, a2, a3 = (int(v) for v in offset)
    _, nx, ny, nz = c.shape
    prof = np.zeros(k_hi - k_lo)
    for i0 in range(0, nx, _CHUNK):
        i1 = min(i0 + _CHUNK, nx)
        src = c[:, (np.arange(i0, i1) + a1) % nx]
        if a2:
            src = np.roll(src, -a2, axis=2)
        ks = np.arange(k_lo, k_hi) + a3
        valid = (ks >= 0) & (ks < nz)
        shifted = np.zeros((3, i1 - i0, ny, k_hi - k_lo))
        shifted[..., valid] = src[..., ks[valid]]
        d = shifted - c[:, i0:i1, :, k_lo:k_hi]
        s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
        prof += (s * np.sqrt(s)).sum(axis=(0, 1))
    return prof


def _increment_integral(c: np.ndarray, grid, offset, region: Region) -> float:
    lo, hi = region.bounds(grid)
    w = z_weights(grid, lo, hi)
    nzw = np.nonzero(w)[0]
    if nzw.size == 0:
        return 0.0
    k_lo, k_hi = int(nzw[0]), int(nzw[-1]) + 1
    prof = _cube_increment_profile(c, offset, k_lo, k_hi)
    return float(np.sum(prof * w[k_lo:k_hi]) * grid.hx * grid.hy)


def structure_function(u: TimeSeries, y: Sequence[int], t: float | None = None,
                       region: Region | None = None) -> float:
    """int_0^t int_{x3 > |y|} |u(x + y) - u(x)|^3 dx dtau.

    y is an integer node offset; u is taken as zero below x3 = 0.  region
    replaces the default D_{>|y|} (e.g. the full slab for symmetry probes).
    """
    u = _series_upto(u, t)
    grid = u.grid
    ylen = _offset_length(grid, y)
    if ylen == 0:
        raise DomainError("structure_function needs a nonzero offset")
    if ylen >= grid.lz / 2:
        raise DomainError(f"|y| = {ylen:.4g} must be below Lz/2 = {grid.lz / 2:.4g}")
    region = Region.above(ylen) if region is None else region
    w = time_weights(u.times)
    total = 0.0
    cache = []
    for wk, snap in zip(w, u.snapshots):
        c = zero_extend(snap).comps
        val = None
        for prev, pv in cache:
            if prev is c or np.array_equal(prev, c):
                val = pv
                break
        if val is None:
            val = _increment_integral(c, grid, y, region)
            cache.append((c, val))
        total += wk * val
    return total


@dataclass
class StructureReport:
    directions: list
    scales: dict                 # direction label -> list of |y|
    s3: dict                     # direction label -> list of S3
    s3_over_y: dict
    slope: dict
    residual: dict
    used_scales: dict            # how many of the smallest scales entered the fit
    degenerate: list
    verdict: str
    thresholds: dict = field(default_factory=lambda: {"slope": SLOPE_THRESHOLD,
                                                       "residual": RESIDUAL_THRESHOLD})

    def to_dict(self) -> dict:
        return {
            "directions": [list(d) for d in self.directions],
            "scales": self.scales, "S3": self.s3, "S3_over_y": self.s3_over_y,
            "slope": self.slope, "residual": self.residual, "used_scales": self.used_scales,
            "degenerate": self.degenerate, "verdict": self.verdict, "thresholds": self.thresholds,
        }

    def csv_rows(self) -> list[list]:
        rows = [["direction", "|y|", "S3", "S3_over_y", "slope", "residual", "verdict"]]
        for d in self.scales:
            for yv, s, r in zip(self.scales[d], self.s3[d], self.s3_over_y[d]):
                rows.append([d, yv, s, r, self.slope[d], self.residual[d], self.verdict])
        return rows


def _label(d) -> str:
    return "(" + ",".join(str(int(v)) for v in d) + ")"


def _fit_with_discard(ys, vals):
    fit = loglog_fit(ys, vals)
    used = len(ys)
    if len(ys) - 2 >= 4:
        trimmed = loglog_fit(ys[:-2], vals[:-2])
        if trimmed.residual < fit.residual:
            fit, used = trimmed, len(ys) - 2
    return fit, used


def bulk_condition_study(u: TimeSeries, directions: Sequence[Sequence[int]], scale_count: int,
                         t: float | None = None, base: int = 1) -> StructureReport:
    """S3(y)/|y| on dyadic ladders y = base * 2^k * d, with log-log slope and verdict."""
    grid = u.grid
    u = _series_upto(u, t)
    scales, s3, ratio, slope, resid, used = {}, {}, {}, {}, {}, {}
    degenerate = []
    for d in directions:
        lab = _label(d)
        ys, vals, offs = [], [], []
        for k in range(scale_count):
            m = base * 2 ** k
            off = tuple(m * int(v) for v in d)
            yl = _offset_length(grid, off)
            if yl == 0 or yl >= grid.lz / 2 or abs(off[0]) >= grid.nx or abs(off[1]) >= grid.ny:
                continue
            ys.append(yl)
            offs.append(off)
        if len(ys) < 4:
            raise DomainError(f"direction {lab} has only {len(ys)} usable scales; at least 4 are needed")
        for off in offs:
            vals.append(structure_function(u, off))
        scales[lab] = ys
        s3[lab] = vals
        ratio[lab] = [v / yl for v, yl in zip(vals, ys)]
        if all(v == 0.0 for v in vals):
            degenerate.append(lab)
            slope[lab], resid[lab], used[lab] = None, None, 0
            continue
        fit, n = _fit_with_discard(ys, ratio[lab])
        slope[lab], resid[lab], used[lab] = fit.slope, fit.residual, n
    active = [lab for lab in scales if lab not in degenerate]
    if not active:
        verdict = "inconclusive"
    elif any(not math.isfinite(slope[l]) for l in active):
        verdict = "inconclusive"
    elif any(slope[l] <= -SLOPE_THRESHOLD for l in active):
        verdict = "violated"
    elif all(slope[l] >= SLOPE_THRESHOLD and resid[l] < RESIDUAL_THRESHOLD for l in active):
        verdict = "satisfied"
    else:
        verdict = "inconclusive"
    return StructureReport([tuple(int(v) for v in d) for d in directions], scales, s3, ratio,
                           slope, resid, used, degenerate, verdict)


@dataclass
class ModulusTable:
    radii: list
    times: list
    values: list          # one list per snapshot, aligned with radii
    monotone: bool
    exponent: list        # fitted slope of log w against log r per snapshot

    def to_dict(self) -> dict:
        return {"radii": self.radii, "times": self.times, "values": self.values,
                "monotone": self.monotone, "exponent": self.exponent}

    def csv_rows(self) -> list[list]:
        rows = [["time", "r", "w"]]
        for t, vals in zip(self.times, self.values):
            for r, v in zip(self.radii, vals):
                rows.append([t, r, v])
        return rows


def boundary_modulus(u: TimeSeries, delta: float) -> ModulusTable:
    """Sup of |u(x + z) - u(x)| over boundary nodes x and offsets |z| <= r within T^2 x [0, delta]."""
    grid = u.grid
    if not delta < grid.lz:
        raise DomainError(f"delta must be below Lz = {grid.lz}")
    if delta < 4 * grid.hz:
        raise DomainError(f"delta = {delta:.4g} is under-resolved; need at least 4 nodes (delta >= {4 * grid.hz:.4g})")
    hmin = min(grid.spacing)
    radii = [0.0]
    r = hmin
    while r <= delta * (1 + 1e-12):
        radii.append(r)
        r *= 2
    R = [int(math.floor(delta / h + 1e-9)) for h in grid.spacing]
    offs, lens = [], []
    for i in range(-min(R[0], grid.nx // 2), min(R[0], grid.nx // 2) + 1):
        for j in range(-min(R[1], grid.ny // 2), min(R[1], grid.ny // 2) + 1):
            for k in range(0, R[2] + 1):
                ln = _offset_length(grid, (i, j, k))
                if ln <= delta * (1 + 1e-12) and k * grid.hz <= delta * (1 + 1e-12):
                    offs.append((i, j, k))
                    lens.append(ln)
    lens = np.array(lens)
    k0 = grid.k0
    values, expo = [], []
    for snap in u.snapshots:
        c = zero_extend(snap).comps
        base = c[:, :, :, k0]
        sup = np.zeros(len(offs))
        for n, (i, j, k) in enumerate(offs):
            other = np.roll(c[:, :, :, k0 + k], (-i, -j), axis=(1, 2))
            d = other - base
            sup[n] = float(np.sqrt((d * d).sum(axis=0)).max())
        vals = []
        for rr in radii:
            sel = lens <= rr * (1 + 1e-12)
            vals.append(float(sup[sel].max()) if sel.any() else 0.0)
        vals = list(np.maximum.accumulate(vals))
        values.append([float(v) for v in vals])
        fit = loglog_fit(radii[1:], vals[1:])
        expo.append(fit.slope)
    monotone = all(all(b >= a for a, b in zip(v, v[1:])) for v in values)
    return ModulusTable([float(r) for r in radii], list(u.times), values, monotone, expo)


@dataclass
class StripTable:
    epsilons: list
    rows: list            # dicts: epsilon, direction, a, b
    a_max: list
    b_max: list
    slope_a: float
    slope_b: float
    sup_u: float
    horizon: float        # total time weight (t, or 1 for a single snapshot)

    def to_dict(self) -> dict:
        return {"epsilons": self.epsilons, "rows": self.rows, "a_max": self.a_max,
                "b_max": self.b_max, "slope_a": self.slope_a, "slope_b": self.slope_b,
                "sup_u": self.sup_u, "horizon": self.horizon}

    def csv_rows(self) -> list[list]:
        out = [["epsilon", "direction", "a", "b"]]
        for r in self.rows:
            out.append([r["epsilon"], r["direction"], r["a"], r["b"]])
        return out


def strip_norm_study(u: TimeSeries, epsilons: Sequence[float], t: float | None = None) -> StripTable:
    """(a) (1/eps) ||u(. - eps eta) - u||^3 and (b) the same for u_E, over T^2 x (-eps, eps) x (0, t)."""
    u = _series_upto(u, t)
    grid = u.grid
    for e in epsilons:
        if e < 2 * grid.hz:
            raise DomainError(f"epsilon = {e:.4g} is below 2 hz = {2 * grid.hz:.4g}")
        if e >= grid.lz / 2:
            raise DomainError(f"epsilon = {e:.4g} must be below Lz/2")
    w = time_weights(u.times)
    plain = [zero_extend(s).comps for s in u.snapshots]
    ext = [extend(s).field.comps for s in u.snapshots]
    rows, amax, bmax = [], [], []
    for e in epsilons:
        region = Region.strip(-e, e)
        best_a = best_b = 0.0
        for axis in range(3):
            n = int(round(e / grid.spacing[axis]))
            off = [0, 0, 0]
            off[axis] = -n
            a = sum(wk * _increment_integral(c, grid, off, region) for wk, c in zip(w, plain)) / e
            b = sum(wk * _increment_integral(c, grid, off, region) for wk, c in zip(w, ext)) / e
            lab = ("e1", "e2", "e3")[axis]
            rows.append({"epsilon": float(e), "direction": lab, "a": a, "b": b})
            best_a, best_b = max(best_a, a), max(best_b, b)
        amax.append(best_a)
        bmax.append(best_b)
    sup_u = max(float(np.sqrt((c * c).sum(axis=0)).max()) for c in plain)
    return StripTable([float(e) for e in epsilons], rows, amax, bmax,
                      loglog_fit(epsilons, amax).slope, loglog_fit(epsilons, bmax).slope,
                      sup_u, float(w.sum()))
